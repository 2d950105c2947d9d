//! Scalar figures of merit: feedback capacity, downlink beamforming rate, NMSE.

use ndarray::Array2;
use num_complex::Complex64;

use super::config::db_to_linear;
use crate::error::{Error, Result};

/// NMSE reported for an exact reconstruction.
pub const NMSE_FLOOR_DB: f64 = -100.0;

/// `η · Σ_j log₂(1 + SNR_FB ‖ĥ_f^j‖²)` for an `n_t × n_f` matrix of channel columns.
pub fn feedback_capacity(h_f: &Array2<Complex64>, snr_fb_db: f64, efficiency: f64) -> f64 {
    let snr = db_to_linear(snr_fb_db);
    let bits: f64 = h_f
        .columns()
        .into_iter()
        .map(|col| {
            let g: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            (snr * g).ln_1p() / std::f64::consts::LN_2
        })
        .sum();
    efficiency * bits
}

/// Row inner product `Σ_k a_k conj(b_k)`.
fn inner(a: ndarray::ArrayView1<Complex64>, b: ndarray::ArrayView1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Average conjugate-beamforming rate over subcarriers:
/// `(1/N_c) Σ_i log₂(1 + SNR_DL |ĥ^i (ĥ̃^i)^H|² / ‖ĥ̃^i‖²)`.
///
/// A zero reconstructed row transmits nothing on that subcarrier.
pub fn downlink_rate(h_true_freq: &Array2<Complex64>, h_hat_freq: &Array2<Complex64>, snr_dl_db: f64) -> Result<f64> {
    if h_true_freq.dim() != h_hat_freq.dim() {
        return Err(Error::shape(format!("{:?} vs {:?}", h_true_freq.dim(), h_hat_freq.dim())));
    }
    let snr = db_to_linear(snr_dl_db);
    let n_c = h_true_freq.nrows();
    let total: f64 = h_true_freq
        .rows()
        .into_iter()
        .zip(h_hat_freq.rows())
        .map(|(a, b)| {
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
            if nb == 0.0 {
                return 0.0;
            }
            let gain = inner(a, b).norm_sqr() / nb;
            (snr * gain).ln_1p() / std::f64::consts::LN_2
        })
        .sum();
    Ok(total / n_c as f64)
}

/// Real gradient of [`downlink_rate`] with respect to the reconstructed matrix.
pub fn downlink_rate_grad(
    h_true_freq: &Array2<Complex64>,
    h_hat_freq: &Array2<Complex64>,
    snr_dl_db: f64,
) -> Result<Array2<Complex64>> {
    if h_true_freq.dim() != h_hat_freq.dim() {
        return Err(Error::shape(format!("{:?} vs {:?}", h_true_freq.dim(), h_hat_freq.dim())));
    }
    let snr = db_to_linear(snr_dl_db);
    let n_c = h_true_freq.nrows() as f64;
    let mut grad = Array2::zeros(h_hat_freq.raw_dim());
    for ((a, b), mut g) in h_true_freq.rows().into_iter().zip(h_hat_freq.rows()).zip(grad.rows_mut()) {
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        if nb == 0.0 {
            continue;
        }
        let s = inner(a, b);
        let q = s.norm_sqr() / nb;
        let outer = snr / ((1.0 + snr * q) * std::f64::consts::LN_2 * n_c);
        for ((gk, ak), bk) in g.iter_mut().zip(a.iter()).zip(b.iter()) {
            *gk = (ak * s.conj() / nb - bk * (s.norm_sqr() / (nb * nb))) * (2.0 * outer);
        }
    }
    Ok(grad)
}

/// Linear NMSE `‖H − Ĥ‖² / ‖H‖²`.
pub fn nmse_linear(h_true: &Array2<Complex64>, h_hat: &Array2<Complex64>) -> Result<f64> {
    if h_true.dim() != h_hat.dim() {
        return Err(Error::shape(format!("{:?} vs {:?}", h_true.dim(), h_hat.dim())));
    }
    let reference: f64 = h_true.iter().map(|z| z.norm_sqr()).sum();
    if reference == 0.0 {
        return Err(Error::DegenerateInput("NMSE reference channel is zero".into()));
    }
    let err: f64 = h_true.iter().zip(h_hat.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(err / reference)
}

/// NMSE in dB; an exact match reports [`NMSE_FLOOR_DB`].
pub fn nmse(h_true: &Array2<Complex64>, h_hat: &Array2<Complex64>) -> Result<f64> {
    Ok(nmse_to_db(nmse_linear(h_true, h_hat)?))
}

pub fn nmse_to_db(linear: f64) -> f64 {
    if linear <= 0.0 {
        NMSE_FLOOR_DB
    } else {
        (10.0 * linear.log10()).max(NMSE_FLOOR_DB)
    }
}
