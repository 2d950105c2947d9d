//! The uplink feedback path: subcarrier choice, power normalization, the SIMO
//! channel `y_j = h_j x_j + z_j`, and maximum ratio combining.
//!
//! Each differentiable step has a `*_backward` companion mapping an upstream
//! gradient to the input gradient. Complex gradients use the real-gradient
//! convention `g = ∂L/∂Re + i ∂L/∂Im`.

use ndarray::Array2;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::config::noise_variance;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// `n_f` distinct subcarriers drawn uniformly without replacement, sorted.
pub fn select_subcarriers(n_c: usize, n_f: usize, subcarrier_seed: u64) -> Result<Vec<usize>> {
    if n_f < 1 || n_f > n_c {
        return Err(Error::config(format!("cannot select {n_f} of {n_c} subcarriers")));
    }
    let mut rng = rng_from(subcarrier_seed);
    let mut idx = rand::seq::index::sample(&mut rng, n_c, n_f).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Channel-input symbols for one feedback event.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackFrame {
    pub x: Vec<Complex64>,
    pub indices: Vec<usize>,
}

impl FeedbackFrame {
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.x)
    }

    pub fn validate(&self, n_c: usize) -> Result<()> {
        if self.x.len() != self.indices.len() {
            return Err(Error::shape(format!("{} symbols for {} subcarriers", self.x.len(), self.indices.len())));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::shape("subcarrier indices must be strictly increasing"));
        }
        if let Some(&last) = self.indices.last() {
            if last >= n_c {
                return Err(Error::shape(format!("subcarrier index {last} out of range for n_c = {n_c}")));
            }
        }
        Ok(())
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Scales `x_raw` to unit mean symbol power: `x = x_raw · √N / ‖x_raw‖`.
pub fn normalize_power(x_raw: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = l2(x_raw);
    if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateInput(format!("cannot normalize a frame with norm {norm}")));
    }
    let s = (x_raw.len() as f64).sqrt() / norm;
    Ok(x_raw.iter().map(|z| z * s).collect())
}

/// Gradient of the normalization: `√N/‖v‖ · (g − u (u·g))` with `u = v/‖v‖`.
pub fn normalize_power_backward(x_raw: &[Complex64], grad_out: &[Complex64]) -> Vec<Complex64> {
    let norm = l2(x_raw);
    let proj: f64 = x_raw.iter().zip(grad_out).map(|(v, g)| v.re * g.re + v.im * g.im).sum::<f64>() / (norm * norm);
    let s = (x_raw.len() as f64).sqrt() / norm;
    x_raw.iter().zip(grad_out).map(|(v, g)| (g - v * proj) * s).collect()
}

/// Received signal and the channel vectors it went through.
/// Both matrices are `n_t × n_f`; column `j` belongs to feedback subcarrier `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub y: Array2<Complex64>,
    pub h_f: Array2<Complex64>,
}

/// Picks the uplink frequency response rows at `indices`, transposed into columns.
pub fn feedback_taps(h_u_freq: &Array2<Complex64>, indices: &[usize]) -> Result<Array2<Complex64>> {
    let (n_c, n_t) = h_u_freq.dim();
    if let Some(&bad) = indices.iter().find(|&&i| i >= n_c) {
        return Err(Error::shape(format!("subcarrier index {bad} out of range for n_c = {n_c}")));
    }
    Ok(Array2::from_shape_fn((n_t, indices.len()), |(a, j)| h_u_freq[[indices[j], a]]))
}

/// Circularly-symmetric complex Gaussian noise with per-entry variance `var`.
pub fn complex_noise(rows: usize, cols: usize, var: f64, seed: u64) -> Array2<Complex64> {
    if var == 0.0 {
        return Array2::zeros((rows, cols));
    }
    let mut rng = rng_from(seed);
    let s = (var / 2.0).sqrt();
    Array2::from_shape_fn((rows, cols), |_| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * s, im * s)
    })
}

/// `y_j = ĥ_f^j x_j + z_j` for every feedback subcarrier `j`.
pub fn apply_feedback_channel(
    frame: &FeedbackFrame,
    h_u_freq: &Array2<Complex64>,
    snr_fb_db: f64,
    noise_seed: u64,
) -> Result<ChannelOutput> {
    frame.validate(h_u_freq.nrows())?;
    if h_u_freq.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("uplink channel".into()));
    }
    let h_f = feedback_taps(h_u_freq, &frame.indices)?;
    Ok(simo_channel(h_f, &frame.x, snr_fb_db, noise_seed))
}

/// The same channel with the feedback taps already extracted (`n_t × n_f`).
pub fn simo_channel(h_f: Array2<Complex64>, x: &[Complex64], snr_fb_db: f64, noise_seed: u64) -> ChannelOutput {
    assert_eq!(h_f.ncols(), x.len(), "one symbol per feedback subcarrier");
    let mut y = complex_noise(h_f.nrows(), h_f.ncols(), noise_variance(snr_fb_db), noise_seed);
    for ((a, j), v) in y.indexed_iter_mut() {
        *v += h_f[[a, j]] * x[j];
    }
    ChannelOutput { y, h_f }
}

/// Gradient of `y = h x` with respect to `x`: `g_x_j = Σ_a conj(h_aj) g_y_aj`.
pub fn apply_feedback_channel_backward(h_f: &Array2<Complex64>, grad_y: &Array2<Complex64>) -> Vec<Complex64> {
    (0..h_f.ncols()).map(|j| h_f.column(j).iter().zip(grad_y.column(j)).map(|(h, g)| h.conj() * g).sum()).collect()
}

fn column_energies(h_f: &Array2<Complex64>) -> Result<Vec<f64>> {
    (0..h_f.ncols())
        .map(|j| {
            let e: f64 = h_f.column(j).iter().map(|z| z.norm_sqr()).sum();
            if e > 0.0 {
                Ok(e)
            } else {
                Err(Error::DegenerateChannel { index: j })
            }
        })
        .collect()
}

/// Unbiased MRC: `x̂_j = (ĥ_f^j)^H y_j / ‖ĥ_f^j‖²`.
pub fn mrc_combine(out: &ChannelOutput) -> Result<Vec<Complex64>> {
    let energy = column_energies(&out.h_f)?;
    Ok(energy
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let s: Complex64 = out.h_f.column(j).iter().zip(out.y.column(j)).map(|(h, y)| h.conj() * y).sum();
            s / e
        })
        .collect())
}

/// Adjoint of MRC: `g_y_j = ĥ_f^j g_x̂_j / ‖ĥ_f^j‖²`.
pub fn mrc_backward(h_f: &Array2<Complex64>, grad_xhat: &[Complex64]) -> Result<Array2<Complex64>> {
    let energy = column_energies(h_f)?;
    Ok(Array2::from_shape_fn(h_f.dim(), |(a, j)| h_f[[a, j]] * grad_xhat[j] / energy[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn full_selection_is_identity_range() {
        assert_eq!(select_subcarriers(256, 256, 9).unwrap(), (0..256).collect::<Vec<_>>());
    }

    #[test]
    fn selection_is_deterministic_sorted_and_unique() {
        let a = select_subcarriers(256, 51, 4).unwrap();
        assert_eq!(a, select_subcarriers(256, 51, 4).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.len(), 51);
        assert!(select_subcarriers(8, 9, 0).is_err());
    }

    #[test]
    fn normalize_leaves_unit_power_frame_unchanged() {
        let x = normalize_power(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((mean_power(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero_frame() {
        assert!(matches!(normalize_power(&[c(0.0, 0.0); 3]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn normalize_backward_matches_finite_difference() {
        let v = vec![c(0.3, -1.2), c(0.7, 0.1), c(-0.4, 0.9)];
        let w = vec![c(1.0, 0.5), c(-0.2, 0.3), c(0.8, -1.1)];
        // L = Re Σ conj(w) x  has real gradient w with respect to x
        let loss = |v: &[Complex64]| -> f64 {
            normalize_power(v).unwrap().iter().zip(&w).map(|(x, w)| (w.conj() * x).re).sum()
        };
        let g = normalize_power_backward(&v, &w);
        let h = 1e-6;
        for k in 0..v.len() {
            for (part, analytic) in [(c(h, 0.0), g[k].re), (c(0.0, h), g[k].im)] {
                let mut p = v.clone();
                let mut m = v.clone();
                p[k] += part;
                m[k] -= part;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                assert!((fd - analytic).abs() < 1e-7, "{fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn hand_computed_two_antenna_channel_and_mrc() {
        let h = Array2::from_shape_vec((1, 2), vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let frame = FeedbackFrame { x: vec![c(1.0, 0.0)], indices: vec![0] };
        let out = apply_feedback_channel(&frame, &h, f64::INFINITY, 0).unwrap();
        assert_eq!(out.y.column(0).to_vec(), vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(mrc_combine(&out).unwrap(), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn mrc_rejects_zero_channel() {
        let out = ChannelOutput { y: Array2::zeros((2, 2)), h_f: Array2::zeros((2, 2)) };
        assert!(matches!(mrc_combine(&out), Err(Error::DegenerateChannel { index: 0 })));
    }

    #[test]
    fn channel_rejects_out_of_range_index() {
        let h = Array2::<Complex64>::ones((4, 2));
        let frame = FeedbackFrame { x: vec![c(1.0, 0.0)], indices: vec![4] };
        assert!(apply_feedback_channel(&frame, &h, 10.0, 0).is_err());
    }

    #[test]
    fn noise_is_reproducible_from_seed() {
        let a = complex_noise(3, 5, 0.5, 77);
        assert_eq!(a, complex_noise(3, 5, 0.5, 77));
        assert_ne!(a, complex_noise(3, 5, 0.5, 78));
    }
}
