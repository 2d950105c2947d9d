//! The untrainable middle of the analog autoencoder: real features become
//! complex symbols, are power-normalized, cross the SIMO channel, get
//! MRC-combined, and are split back into real features.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linkphys::{
    apply_feedback_channel_backward, mrc_backward, mrc_combine, normalize_power, normalize_power_backward, simo_channel,
};

/// Pairs `(f[2j], f[2j+1])` into `f[2j] + i f[2j+1]` without normalization.
pub fn group_features(f: &[f64]) -> Result<Vec<Complex64>> {
    if !f.len().is_multiple_of(2) {
        return Err(Error::shape(format!("feature vector length {} is odd", f.len())));
    }
    Ok(f.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

/// Groups real features into complex symbols and normalizes the frame to unit mean power.
pub fn features_to_symbols(f: &[f64]) -> Result<Vec<Complex64>> {
    normalize_power(&group_features(f)?)
}

/// Interleaves real and imaginary parts.
pub fn symbols_to_features(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Intermediate values of one pass, kept for the backward pass.
pub struct LinkTrace {
    raw: Vec<Complex64>,
    h_f: Array2<Complex64>,
    pub transmitted: Vec<Complex64>,
}

/// Features in, received (MRC-equalized) features out.
pub fn link_forward(
    f: &[f64],
    h_f: &Array2<Complex64>,
    snr_fb_db: f64,
    noise_seed: u64,
) -> Result<(Vec<f64>, LinkTrace)> {
    let raw = group_features(f)?;
    let x = normalize_power(&raw)?;
    let out = simo_channel(h_f.clone(), &x, snr_fb_db, noise_seed);
    let x_hat = mrc_combine(&out)?;
    Ok((symbols_to_features(&x_hat), LinkTrace { raw, h_f: out.h_f, transmitted: x }))
}

/// Gradient of [`link_forward`] with respect to the input features.
pub fn link_backward(trace: &LinkTrace, grad_received: &[f64]) -> Result<Vec<f64>> {
    let g_xhat = group_features(grad_received)?;
    let g_y = mrc_backward(&trace.h_f, &g_xhat)?;
    let g_x = apply_feedback_channel_backward(&trace.h_f, &g_y);
    let g_raw = normalize_power_backward(&trace.raw, &g_x);
    Ok(symbols_to_features(&g_raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkphys::mean_power;

    #[test]
    fn grouping_examples() {
        let x = features_to_symbols(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(x, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let x = features_to_symbols(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((mean_power(&x) - 1.0).abs() < 1e-12);
        assert!((x[0].re - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            symbols_to_features(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]),
            vec![1.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(symbols_to_features(&[Complex64::default(); 2]), vec![0.0; 4]);
        assert!(features_to_symbols(&[0.0; 4]).is_err());
        assert!(features_to_symbols(&[1.0; 3]).is_err());
    }

    #[test]
    fn round_trip_recovers_features_up_to_positive_scale() {
        let f = [0.3, -1.0, 2.5, 0.7, -0.2, 0.1];
        let back = symbols_to_features(&features_to_symbols(&f).unwrap());
        let ratio = back[0] / f[0];
        assert!(ratio > 0.0);
        for (a, b) in back.iter().zip(f) {
            assert!((a - ratio * b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_link_returns_normalized_symbols() {
        let h_f = Array2::from_shape_fn((4, 3), |(a, j)| Complex64::new(1.0 + a as f64, j as f64 - 1.0));
        let f = [0.5, 0.5, -1.0, 0.0, 0.2, 0.9];
        let (rx, trace) = link_forward(&f, &h_f, f64::INFINITY, 3).unwrap();
        let expected = symbols_to_features(&trace.transmitted);
        for (a, b) in rx.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
