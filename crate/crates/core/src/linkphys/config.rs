use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power ratio in dB to linear scale (`10^(x/10)`).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Link-level parameters for one feedback operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_c: usize,
    pub n_t: usize,
    /// Uplink subcarriers carrying feedback.
    pub n_f: usize,
    pub snr_fb_db: f64,
    pub snr_dl_db: f64,
    pub subcarrier_seed: u64,
    /// Fraction of the feedback capacity a practical code can use; 1 is capacity-achieving.
    pub capacity_efficiency: f64,
}

impl SystemConfig {
    pub fn new(n_c: usize, n_t: usize, n_f: usize, snr_fb_db: f64, snr_dl_db: f64) -> Result<Self> {
        let cfg = Self { n_c, n_t, n_f, snr_fb_db, snr_dl_db, subcarrier_seed: 0, capacity_efficiency: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a config from a feedback overhead, rounding `rho * n_c` to the nearest subcarrier count.
    pub fn with_rho(n_c: usize, n_t: usize, rho: f64, snr_fb_db: f64, snr_dl_db: f64) -> Result<Self> {
        Self::new(n_c, n_t, n_f_for_rho(n_c, rho)?, snr_fb_db, snr_dl_db)
    }

    /// Feedback overhead `n_f / n_c`.
    pub fn rho(&self) -> f64 {
        self.n_f as f64 / self.n_c as f64
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.snr_fb_db)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c < 1 || self.n_t < 1 {
            return Err(Error::config("n_c and n_t must be at least 1"));
        }
        if self.n_f < 1 || self.n_f > self.n_c {
            return Err(Error::config(format!("n_f = {} must lie in [1, n_c = {}]", self.n_f, self.n_c)));
        }
        if self.snr_fb_db.is_nan() || self.snr_dl_db.is_nan() {
            return Err(Error::config("SNR values must not be NaN"));
        }
        if !(self.capacity_efficiency > 0.0 && self.capacity_efficiency <= 1.0) {
            return Err(Error::config("capacity_efficiency must lie in (0, 1]"));
        }
        Ok(())
    }
}

pub fn n_f_for_rho(n_c: usize, rho: f64) -> Result<usize> {
    let n_f = (rho * n_c as f64).round();
    if !(n_f >= 1.0 && n_f <= n_c as f64) {
        return Err(Error::config(format!(
            "rho = {rho} gives {n_f} feedback subcarriers; feasible range is [{}, 1]",
            1.0 / n_c as f64
        )));
    }
    Ok(n_f as usize)
}

/// Per-antenna complex noise variance against unit symbol power: `10^(-snr/10)`.
pub fn noise_variance(snr_fb_db: f64) -> f64 {
    db_to_linear(-snr_fb_db)
}
