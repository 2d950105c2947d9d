//! Factorized discretized-Laplace probability model for quantized latents.
//!
//! A latent `x` (in quantizer steps) with location `mu` and scale `b` has mass
//! `P(x) = F((x + ½ − mu)/b) − F((x − ½ − mu)/b)` under the Laplace CDF `F`.

use std::f64::consts::LN_2;

/// Scale floor; keeps every interval mass bounded away from one.
pub const MIN_SCALE: f64 = 0.05;

/// `ln(½ e^{−|t|})`, the log density of the standard Laplace distribution.
fn log_density(t: f64) -> f64 {
    -LN_2 - t.abs()
}

/// `ln P` for the interval `[a, c]` of the standard Laplace distribution, `a < c`.
fn log_mass(a: f64, c: f64) -> f64 {
    if c <= 0.0 {
        -LN_2 + c + (-(a - c).exp_m1()).ln()
    } else if a >= 0.0 {
        -LN_2 - a + (-(a - c).exp_m1()).ln()
    } else {
        (-0.5 * (-c).exp_m1() - 0.5 * a.exp_m1()).ln()
    }
}

pub fn scale_of(log_scale: f64) -> f64 {
    MIN_SCALE + log_scale.exp()
}

/// Code length in bits of latent `x` and its partial derivatives with respect
/// to `x`, the location and the log-scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitsGrad {
    pub bits: f64,
    pub d_x: f64,
    pub d_loc: f64,
    pub d_log_scale: f64,
}

pub fn bits_and_grad(x: f64, loc: f64, log_scale: f64) -> BitsGrad {
    let b = scale_of(log_scale);
    let a = (x - 0.5 - loc) / b;
    let c = (x + 0.5 - loc) / b;
    let lp = log_mass(a, c);
    let r_a = (log_density(a) - lp).exp();
    let r_c = (log_density(c) - lp).exp();
    // d ln P / d x = (f(c) − f(a)) / (b P)
    let dl_dx = (r_c - r_a) / b;
    let dl_db = -(r_c * c - r_a * a) / b;
    let k = -1.0 / LN_2;
    BitsGrad { bits: k * lp, d_x: k * dl_dx, d_loc: -k * dl_dx, d_log_scale: k * dl_db * (b - MIN_SCALE) }
}

pub fn bits(x: f64, loc: f64, log_scale: f64) -> f64 {
    let b = scale_of(log_scale);
    -log_mass((x - 0.5 - loc) / b, (x + 0.5 - loc) / b) / LN_2
}

/// Masses of the integers `-bound..=bound` (tails beyond the range are dropped).
pub fn symbol_probabilities(loc: f64, log_scale: f64, bound: i32) -> Vec<f64> {
    (-bound..=bound).map(|k| (-bits(f64::from(k), loc, log_scale) * LN_2).exp()).collect()
}
