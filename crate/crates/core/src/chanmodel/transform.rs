//! Column-wise unitary DFT between the angular-delay grid and subcarriers.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

fn check_finite(h: &Array2<Complex64>) -> Result<()> {
    if h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("channel matrix".into()))
    }
}

fn transform(h: &Array2<Complex64>, direction: FftDirection) -> Result<Array2<Complex64>> {
    check_finite(h)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(h.clone());
    }
    let fft = FftPlanner::<f64>::new().plan_fft(n, direction);
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = Array2::zeros(h.raw_dim());
    let mut buf = vec![Complex64::default(); n];
    for (col_in, mut col_out) in h.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
        buf.iter_mut().zip(col_in.iter()).for_each(|(b, &v)| *b = v);
        fft.process(&mut buf);
        col_out.iter_mut().zip(&buf).for_each(|(o, &v)| *o = v * scale);
    }
    Ok(out)
}

/// Delay taps to subcarriers: unitary DFT of every antenna column.
pub fn to_frequency(h: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    transform(h, FftDirection::Forward)
}

/// Subcarriers to delay taps; exact inverse of [`to_frequency`].
pub fn to_delay(h_freq: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    transform(h_freq, FftDirection::Inverse)
}
