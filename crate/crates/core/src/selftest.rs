//! Physics property suite behind `csifb selftest`. The physics functions are
//! injected so a deliberately broken implementation can be shown to fail.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::analog::{build_analog_model, loss_and_grad, spec_for_overhead};
use crate::chanmodel::{self, to_frequency, CMatrix, Dataset, GeometryConfig, Split};
use crate::error::Result;
use crate::linkphys::{self, db_to_linear, feedback_taps, select_subcarriers, ChannelOutput};
use crate::nn::{Layer, Model};
use crate::rng::{derive_seed, rng_from, tag};

type Matrix = Array2<Complex64>;

/// The implementations under test.
#[derive(Clone, Copy)]
pub struct Physics {
    pub normalize_power: fn(&[Complex64]) -> Result<Vec<Complex64>>,
    pub simo_channel: fn(Matrix, &[Complex64], f64, u64) -> ChannelOutput,
    pub mrc_combine: fn(&ChannelOutput) -> Result<Vec<Complex64>>,
    pub feedback_capacity: fn(&Matrix, f64, f64) -> f64,
    pub downlink_rate: fn(&Matrix, &Matrix, f64) -> Result<f64>,
    pub to_frequency: fn(&CMatrix) -> Result<CMatrix>,
    pub to_delay: fn(&CMatrix) -> Result<CMatrix>,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            normalize_power: linkphys::normalize_power,
            simo_channel: linkphys::simo_channel,
            mrc_combine: linkphys::mrc_combine,
            feedback_capacity: linkphys::feedback_capacity,
            downlink_rate: linkphys::downlink_rate,
            to_frequency: chanmodel::to_frequency,
            to_delay: chanmodel::to_delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub invariant: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(invariant: &'static str, passed: bool, detail: String) -> Self {
        Self { invariant, passed, detail }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

fn check(invariant: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    match f() {
        Ok((passed, detail)) => CheckOutcome::new(invariant, passed, detail),
        Err(e) => CheckOutcome::new(invariant, false, format!("error: {e}")),
    }
}

pub fn power_constraint(p: &Physics, seed: u64) -> CheckOutcome {
    check("power constraint", || {
        let mut rng = rng_from(seed);
        let mut worst = 0.0f64;
        for k in 0..200 {
            let n = 1 + k % 64;
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let raw: Vec<Complex64> = gaussian(1, n, &mut rng).iter().map(|z| z * scale).collect();
            let x = (p.normalize_power)(&raw)?;
            worst = worst.max((linkphys::mean_power(&x) - 1.0).abs());
        }
        Ok((worst <= 1e-5, format!("max |mean power - 1| = {worst:.2e} (tol 1e-5)")))
    })
}

pub fn mrc_identity(p: &Physics, seed: u64) -> CheckOutcome {
    check("MRC noiseless identity", || {
        let mut rng = rng_from(seed);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let h = gaussian(8, 16, &mut rng);
            let x: Vec<Complex64> = gaussian(1, 16, &mut rng).iter().copied().collect();
            let out = (p.simo_channel)(h, &x, f64::INFINITY, 0);
            let xh = (p.mrc_combine)(&out)?;
            for (a, b) in xh.iter().zip(&x) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok((worst <= 1e-6, format!("max |x_hat - x| = {worst:.2e} (tol 1e-6)")))
    })
}

/// Post-combining SNR against `SNR_FB · ‖h‖²` over 10⁵ noise draws.
pub fn mrc_snr(p: &Physics, seed: u64) -> CheckOutcome {
    check("MRC post-combining SNR", || {
        let draws = 100_000;
        let snr_db = 10.0;
        let mut rng = rng_from(seed);
        let col = gaussian(4, 1, &mut rng).mapv(|z| z * 0.5);
        let h = Array2::from_shape_fn((4, draws), |(a, _)| col[[a, 0]]);
        let x = vec![Complex64::new(1.0, 0.0); draws];
        let out = (p.simo_channel)(h, &x, snr_db, derive_seed(&[seed, tag("mrc_snr")]));
        let xh = (p.mrc_combine)(&out)?;
        let noise = xh.iter().map(|z| (z - 1.0).norm_sqr()).sum::<f64>() / draws as f64;
        let g: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        let expected = db_to_linear(snr_db) * g;
        let measured = 1.0 / noise;
        let rel = (measured / expected - 1.0).abs();
        Ok((rel <= 0.03, format!("measured {measured:.4} vs SNR*|h|^2 = {expected:.4} (rel {rel:.3}, tol 0.03)")))
    })
}

pub fn capacity_recompute(p: &Physics, seed: u64) -> CheckOutcome {
    check("feedback capacity", || {
        let mut rng = rng_from(seed);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let n_f = rng.random_range(1..32);
            let h = gaussian(8, n_f, &mut rng);
            let snr_db = rng.random_range(-5.0..25.0);
            let eta = rng.random_range(0.5..=1.0);
            let snr = 10f64.powf(snr_db / 10.0);
            let mut expect = 0.0;
            for j in 0..n_f {
                let mut g = 0.0;
                for a in 0..8 {
                    g += h[[a, j]].re * h[[a, j]].re + h[[a, j]].im * h[[a, j]].im;
                }
                expect += (1.0 + snr * g).log2();
            }
            worst = worst.max(((p.feedback_capacity)(&h, snr_db, eta) - eta * expect).abs());
        }
        let unit = (p.feedback_capacity)(&Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)), 0.0, 1.0);
        let two = Array2::from_shape_vec(
            (1, 2),
            vec![Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.0, 2.0f64.sqrt())],
        )
        .expect("shape");
        let pair = (p.feedback_capacity)(&two, 10.0, 1.0);
        let pair_expect = 6f64.log2() + 21f64.log2();
        let ok = worst <= 1e-9 && (unit - 1.0).abs() <= 1e-9 && (pair - pair_expect).abs() <= 1e-9;
        Ok((ok, format!("max deviation {worst:.2e}; 1-bit case {unit}; two-subcarrier case {pair:.6} (tol 1e-9)")))
    })
}

pub fn downlink_rate_cases(p: &Physics, seed: u64) -> CheckOutcome {
    check("downlink rate", || {
        let mut rng = rng_from(seed);
        // SNR_DL‖h^i‖² = 3 on every subcarrier → log₂(4) = 2
        let snr_db = 10.0;
        let h = Array2::from_shape_fn((16, 4), |_| Complex64::new((0.3f64 / 4.0).sqrt(), 0.0));
        let perfect = (p.downlink_rate)(&h, &h, snr_db)?;
        let mut h_orth = Array2::zeros((16, 4));
        let mut g_orth = Array2::zeros((16, 4));
        for i in 0..16 {
            h_orth[[i, 0]] = Complex64::new(1.0, 0.0);
            g_orth[[i, 1]] = Complex64::new(0.0, 1.0);
        }
        let orth = (p.downlink_rate)(&h_orth, &g_orth, snr_db)?;
        let mut worst_scale = 0.0f64;
        for _ in 0..20 {
            let a = gaussian(16, 4, &mut rng);
            let b = gaussian(16, 4, &mut rng);
            let c = Complex64::from_polar(rng.random_range(0.1..10.0), rng.random_range(0.0..std::f64::consts::TAU));
            let r1 = (p.downlink_rate)(&a, &b, snr_db)?;
            let r2 = (p.downlink_rate)(&a, &b.mapv(|z| z * c), snr_db)?;
            worst_scale = worst_scale.max((r1 - r2).abs());
        }
        let ok = (perfect - 2.0).abs() <= 1e-12 && orth.abs() <= 1e-12 && worst_scale <= 1e-12;
        Ok((ok, format!("perfect {perfect}; orthogonal {orth}; scale invariance deviation {worst_scale:.1e}")))
    })
}

pub fn fft_unitarity(p: &Physics, seed: u64) -> CheckOutcome {
    check("FFT unitarity and round trip", || {
        let mut rng = rng_from(seed);
        let (mut parseval, mut round) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let h = gaussian(64, 8, &mut rng);
            let f = (p.to_frequency)(&h)?;
            let e_h: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            let e_f: f64 = f.iter().map(|z| z.norm_sqr()).sum();
            parseval = parseval.max((e_f.sqrt() / e_h.sqrt() - 1.0).abs());
            let back = (p.to_delay)(&f)?;
            round = round.max(back.iter().zip(h.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
        Ok((
            parseval <= 1e-6 && round <= 1e-6,
            format!("Parseval rel {parseval:.1e}; round trip {round:.1e} (tol 1e-6)"),
        ))
    })
}

/// Relative disagreement used by the gradient checks.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(analytic.abs()).max(1e-8)
}

/// Analytic encoder-weight gradients of the end-to-end MSE (through channel
/// noise and MRC, noise fixed by seed) against central differences.
pub fn analog_gradient(seed: u64, coordinates: usize) -> CheckOutcome {
    check("analog end-to-end gradient", || {
        let (n_c, n_t) = (32, 4);
        let geometry = GeometryConfig { max_delay_taps: 8, ..GeometryConfig::default() };
        let ds = Dataset::generate(&geometry, n_c, n_t, 3, Split::Train, seed)?;
        let spec = spec_for_overhead(n_c, n_t, 0.25)?.with_widths(&[3, 6]);
        let mut model = build_analog_model::<f64>(&spec, seed)?;
        let indices = select_subcarriers(n_c, spec.n_f, seed)?;
        let h: Vec<&CMatrix> = ds.samples.iter().map(|s| &s.h_d).collect();
        let taps =
            ds.samples.iter().map(|s| feedback_taps(&to_frequency(&s.h_u)?, &indices)).collect::<Result<Vec<_>>>()?;
        let noise = [11, 12, 13];
        let snr = 10.0;
        model.zero_grad();
        loss_and_grad(&mut model, &h, &taps, snr, &noise)?;
        let mut coords: Vec<(String, usize, usize, f64)> = Vec::new();
        let mut names = Vec::new();
        model.encoder.visit("encoder", &mut |name, p| {
            if p.trainable && name.ends_with("weight") {
                names.push((name.to_string(), p.value.dim()));
            }
        });
        let mut rng = rng_from(derive_seed(&[seed, tag("coords")]));
        while coords.len() < coordinates {
            let (name, (r, c)) = names[rng.random_range(0..names.len())].clone();
            let (i, j) = (rng.random_range(0..r), rng.random_range(0..c));
            let mut g = 0.0;
            model.visit_params(&mut |n, p| {
                if n == name {
                    g = p.grad[[i, j]];
                }
            });
            if g.abs() > 1e-7 {
                coords.push((name, i, j, g));
            }
        }
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for (name, i, j, g) in &coords {
            let mut eval = |delta: f64| -> Result<f64> {
                model.visit_params(&mut |n, p| {
                    if n == name {
                        p.value[[*i, *j]] += delta;
                    }
                });
                let l = loss_and_grad(&mut model, &h, &taps, snr, &noise)?;
                model.visit_params(&mut |n, p| {
                    if n == name {
                        p.value[[*i, *j]] -= delta;
                    }
                });
                Ok(l)
            };
            let numeric = (eval(eps)? - eval(-eps)?) / (2.0 * eps);
            worst = worst.max(rel_err(*g, numeric));
        }
        Ok((worst <= 1e-3, format!("{} encoder coordinates, max relative error {worst:.2e} (tol 1e-3)", coords.len())))
    })
}

/// Beamforming-rate gradient against central differences.
pub fn rate_gradient(seed: u64, coordinates: usize) -> CheckOutcome {
    check("beamforming-rate gradient", || {
        let mut rng = rng_from(seed);
        let a = gaussian(16, 4, &mut rng);
        let b = gaussian(16, 4, &mut rng);
        let snr = 10.0;
        let g = linkphys::downlink_rate_grad(&a, &b, snr)?;
        let eps = 1e-6;
        let mut worst = 0.0f64;
        for k in 0..coordinates {
            let (i, j) = (rng.random_range(0..16), rng.random_range(0..4));
            let dir = if k % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
            let mut bp = b.clone();
            bp[[i, j]] += dir * eps;
            let mut bm = b.clone();
            bm[[i, j]] -= dir * eps;
            let numeric =
                (linkphys::downlink_rate(&a, &bp, snr)? - linkphys::downlink_rate(&a, &bm, snr)?) / (2.0 * eps);
            let analytic = if k % 2 == 0 { g[[i, j]].re } else { g[[i, j]].im };
            worst = worst.max(rel_err(analytic, numeric));
        }
        Ok((worst <= 1e-3, format!("{coordinates} coordinates, max relative error {worst:.2e} (tol 1e-3)")))
    })
}

/// The full suite: physics oracles against `physics`, then gradient checks.
pub fn run_selftest(physics: &Physics, seed: u64) -> Vec<CheckOutcome> {
    vec![
        power_constraint(physics, seed),
        mrc_identity(physics, seed),
        mrc_snr(physics, seed),
        capacity_recompute(physics, seed),
        downlink_rate_cases(physics, seed),
        fft_unitarity(physics, seed),
        analog_gradient(seed, 24),
        rate_gradient(seed, 24),
    ]
}
