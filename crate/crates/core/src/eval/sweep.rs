use ndarray::Array2;
use num_complex::Complex64;

use super::report::{RateReport, RateRow, SkippedPoint};
use crate::analog::{analog_forward_batch, AnalogCheckpoint};
use crate::chanmodel::{to_frequency, CMatrix, Dataset};
use crate::digital::{digital_encode_batch, digital_reconstruct, digital_transmit, DigitalCheckpoint};
use crate::error::{Error, Result};
use crate::linkphys::{
    downlink_rate, feedback_capacity, feedback_taps, n_f_for_rho, nmse_linear, nmse_to_db, select_subcarriers, Scheme,
};
use crate::rng::{derive_seed, tag};

const CHUNK: usize = 100;

/// Mean of `downlink_rate(Ĥ, Ĥ)` over the set: the perfect-CSI bound.
pub fn perfect_csi_rate(test_set: &Dataset, snr_dl_db: f64) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    let mut total = 0.0;
    for s in &test_set.samples {
        let f = to_frequency(&s.h_d)?;
        total += downlink_rate(&f, &f, snr_dl_db)?;
    }
    Ok(total / test_set.len() as f64)
}

/// Mean rate when the BS beamforms with the mean channel: the floor.
pub fn average_csi_rate(test_set: &Dataset, mean_ch: &CMatrix, snr_dl_db: f64) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    let m = to_frequency(mean_ch)?;
    let mut total = 0.0;
    for s in &test_set.samples {
        total += downlink_rate(&to_frequency(&s.h_d)?, &m, snr_dl_db)?;
    }
    Ok(total / test_set.len() as f64)
}

/// Grid axes shared by every scheme in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub rho: Vec<f64>,
    pub snr_fb_db: Vec<f64>,
    pub snr_dl_db: f64,
    /// Subcarrier selection for digital capacity; analog uses its checkpoint's.
    pub subcarrier_seed: u64,
    pub capacity_efficiency: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.rho.is_empty() || self.snr_fb_db.is_empty() {
            return Err(Error::config("sweep grids must be non-empty"));
        }
        if !(self.capacity_efficiency > 0.0 && self.capacity_efficiency <= 1.0) {
            return Err(Error::config("capacity_efficiency must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// A test set with its frequency-domain channels and per-sample reference rates.
pub struct EvalSet<'a> {
    pub data: &'a Dataset,
    pub fallback: CMatrix,
    pub snr_dl_db: f64,
    h_d_freq: Vec<CMatrix>,
    h_u_freq: Vec<CMatrix>,
    perfect: Vec<f64>,
    floor: Vec<f64>,
    floor_nmse: Vec<f64>,
}

impl<'a> EvalSet<'a> {
    pub fn new(data: &'a Dataset, fallback: &CMatrix, snr_dl_db: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("test set".into()));
        }
        if fallback.dim() != (data.n_c(), data.n_t()) {
            return Err(Error::GridMismatch(format!(
                "fallback {:?} for a {}×{} set",
                fallback.dim(),
                data.n_c(),
                data.n_t()
            )));
        }
        let fallback_freq = to_frequency(fallback)?;
        let mut set = Self {
            data,
            fallback: fallback.clone(),
            snr_dl_db,
            h_d_freq: Vec::with_capacity(data.len()),
            h_u_freq: Vec::with_capacity(data.len()),
            perfect: Vec::with_capacity(data.len()),
            floor: Vec::with_capacity(data.len()),
            floor_nmse: Vec::with_capacity(data.len()),
        };
        for s in &data.samples {
            let f = to_frequency(&s.h_d)?;
            set.perfect.push(downlink_rate(&f, &f, snr_dl_db)?);
            set.floor.push(downlink_rate(&f, &fallback_freq, snr_dl_db)?);
            set.floor_nmse.push(nmse_linear(&s.h_d, fallback)?);
            set.h_d_freq.push(f);
            set.h_u_freq.push(to_frequency(&s.h_u)?);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn perfect_rate(&self) -> f64 {
        mean(&self.perfect)
    }

    pub fn floor_rate(&self) -> f64 {
        mean(&self.floor)
    }

    fn n_c(&self) -> usize {
        self.data.n_c()
    }

    fn taps(&self, i: usize, indices: &[usize]) -> Result<Array2<Complex64>> {
        feedback_taps(&self.h_u_freq[i], indices)
    }

    /// Rate and linear NMSE of one reconstruction of sample `i`.
    fn score(&self, i: usize, h_hat: &CMatrix) -> Result<(f64, f64)> {
        let rate = downlink_rate(&self.h_d_freq[i], &to_frequency(h_hat)?, self.snr_dl_db)?;
        Ok((rate, nmse_linear(&self.data.samples[i].h_d, h_hat)?))
    }

    fn reference_rows(&self, rho: f64, snr_fb_db: f64, seed: u64) -> [RateRow; 2] {
        let row = |scheme, rate, nmse_db| RateRow {
            scheme,
            rho,
            snr_fb_db,
            snr_dl_db: self.snr_dl_db,
            lambda: None,
            mean_rate_bps_hz: rate,
            mean_nmse_db: nmse_db,
            failure_rate: 0.0,
            n_samples: self.len(),
            seed,
        };
        [
            row(Scheme::Perfect, self.perfect_rate(), nmse_to_db(0.0)),
            row(Scheme::Average, self.floor_rate(), nmse_to_db(mean(&self.floor_nmse))),
        ]
    }

    /// Analog scheme at the checkpoint's own operating point.
    pub fn analog_row(&self, ckpt: &mut AnalogCheckpoint, eval_seed: u64) -> Result<RateRow> {
        let system = ckpt.meta.system.clone();
        if (system.n_c, system.n_t) != (self.n_c(), self.data.n_t()) {
            return Err(Error::GridMismatch(format!(
                "analog checkpoint is {}×{}, test set {}×{}",
                system.n_c,
                system.n_t,
                self.n_c(),
                self.data.n_t()
            )));
        }
        let snr = ckpt.meta.trained_snr_fb_db;
        let indices = ckpt.meta.subcarriers.clone();
        let (mut rate, mut err) = (0.0, 0.0);
        let ids: Vec<usize> = (0..self.len()).collect();
        for chunk in ids.chunks(CHUNK) {
            let h: Vec<&CMatrix> = chunk.iter().map(|&i| &self.data.samples[i].h_d).collect();
            let taps = chunk.iter().map(|&i| self.taps(i, &indices)).collect::<Result<Vec<_>>>()?;
            let seeds: Vec<u64> = chunk
                .iter()
                .map(|&i| analog_noise_seed(eval_seed, system.n_f, snr, self.data.samples[i].sample_id))
                .collect();
            let rec = analog_forward_batch(&mut ckpt.model, &h, &taps, snr, &seeds)?;
            for (&i, r) in chunk.iter().zip(&rec) {
                let (a, b) = self.score(i, r)?;
                rate += a;
                err += b;
            }
        }
        let n = self.len() as f64;
        Ok(RateRow {
            scheme: Scheme::Analog,
            rho: system.rho(),
            snr_fb_db: snr,
            snr_dl_db: self.snr_dl_db,
            lambda: None,
            mean_rate_bps_hz: rate / n,
            mean_nmse_db: nmse_to_db(err / n),
            failure_rate: 0.0,
            n_samples: self.len(),
            seed: eval_seed,
        })
    }

    /// Codes every sample once; the outcome at each grid point only depends on capacity.
    pub fn digital_outcomes(&self, ckpt: &mut DigitalCheckpoint) -> Result<DigitalOutcomes> {
        let spec = &ckpt.meta.spec;
        if (spec.n_c(), spec.n_t()) != (self.n_c(), self.data.n_t()) {
            return Err(Error::GridMismatch(format!(
                "digital checkpoint is {}×{}, test set {}×{}",
                spec.n_c(),
                spec.n_t(),
                self.n_c(),
                self.data.n_t()
            )));
        }
        let mut out = DigitalOutcomes { lambda: spec.lambda, ..DigitalOutcomes::default() };
        for chunk in self.data.samples.chunks(CHUNK) {
            let h: Vec<&CMatrix> = chunk.iter().map(|s| &s.h_d).collect();
            for bs in digital_encode_batch(&mut ckpt.codec, &h)? {
                let i = out.n_bits.len();
                let rec = digital_reconstruct(&bs, &mut ckpt.codec, true, &self.fallback)?;
                let (rate, err) = self.score(i, &rec.h_d_hat)?;
                out.n_bits.push(bs.n_bits);
                out.est_bits.push(bs.est_bits);
                out.rate.push(rate);
                out.nmse.push(err);
            }
        }
        Ok(out)
    }

    /// Capacity of the feedback link of sample `i`.
    pub fn capacity(&self, i: usize, indices: &[usize], snr_fb_db: f64, efficiency: f64) -> Result<f64> {
        Ok(feedback_capacity(&self.taps(i, indices)?, snr_fb_db, efficiency))
    }

    pub fn digital_row(
        &self,
        outcomes: &DigitalOutcomes,
        grid: &SweepGrid,
        rho: f64,
        snr_fb_db: f64,
        eval_seed: u64,
    ) -> Result<RateRow> {
        let n_f = n_f_for_rho(self.n_c(), rho)?;
        let indices = select_subcarriers(self.n_c(), n_f, grid.subcarrier_seed)?;
        let (mut rate, mut err, mut failures) = (0.0, 0.0, 0usize);
        for i in 0..self.len() {
            let c_fb = self.capacity(i, &indices, snr_fb_db, grid.capacity_efficiency)?;
            let bs = crate::digital::Bitstream { payload: Vec::new(), n_bits: outcomes.n_bits[i], est_bits: 0.0 };
            if digital_transmit(&bs, c_fb) {
                rate += outcomes.rate[i];
                err += outcomes.nmse[i];
            } else {
                failures += 1;
                rate += self.floor[i];
                err += self.floor_nmse[i];
            }
        }
        let n = self.len() as f64;
        Ok(RateRow {
            scheme: Scheme::Digital,
            rho: n_f as f64 / self.n_c() as f64,
            snr_fb_db,
            snr_dl_db: self.snr_dl_db,
            lambda: Some(outcomes.lambda),
            mean_rate_bps_hz: rate / n,
            mean_nmse_db: nmse_to_db(err / n),
            failure_rate: failures as f64 / n,
            n_samples: self.len(),
            seed: eval_seed,
        })
    }
}

/// Per-sample results of one digital codec on the success path.
#[derive(Debug, Clone, Default)]
pub struct DigitalOutcomes {
    pub lambda: f64,
    pub n_bits: Vec<usize>,
    pub est_bits: Vec<f64>,
    pub rate: Vec<f64>,
    pub nmse: Vec<f64>,
}

impl DigitalOutcomes {
    pub fn mean_bits(&self) -> f64 {
        mean(&self.n_bits.iter().map(|&b| b as f64).collect::<Vec<_>>())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Channel noise seed of one evaluation sample at one analog grid point.
pub fn analog_noise_seed(eval_seed: u64, n_f: usize, snr_fb_db: f64, sample_id: u64) -> u64 {
    derive_seed(&[eval_seed, tag("eval.analog"), n_f as u64, snr_fb_db.to_bits(), sample_id])
}

/// Evaluates every scheme over the grid. Analog checkpoints are matched by
/// `(n_f, trained SNR)`; points without one are recorded as skipped. Every
/// digital checkpoint is evaluated at every point. Perfect and average rows
/// are emitted per point.
pub fn sweep(
    analog: &mut [AnalogCheckpoint],
    digital: &mut [DigitalCheckpoint],
    set: &EvalSet<'_>,
    grid: &SweepGrid,
    eval_seed: u64,
) -> Result<RateReport> {
    grid.validate()?;
    if (set.snr_dl_db - grid.snr_dl_db).abs() > 0.0 {
        return Err(Error::GridMismatch("evaluation set and grid disagree on snr_dl_db".into()));
    }
    let outcomes = digital.iter_mut().map(|c| set.digital_outcomes(c)).collect::<Result<Vec<_>>>()?;
    let have_analog = !analog.is_empty();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &snr in &grid.snr_fb_db {
        for &rho in &grid.rho {
            let n_f = n_f_for_rho(set.n_c(), rho)?;
            let rho_eff = n_f as f64 / set.n_c() as f64;
            rows.extend(set.reference_rows(rho_eff, snr, eval_seed));
            match analog.iter_mut().find(|c| c.meta.system.n_f == n_f && c.meta.trained_snr_fb_db == snr) {
                Some(c) => rows.push(set.analog_row(c, eval_seed)?),
                None if have_analog => skipped.push(SkippedPoint {
                    scheme: Scheme::Analog,
                    rho: rho_eff,
                    snr_fb_db: snr,
                    reason: format!("no analog checkpoint for n_f = {n_f} at {snr} dB"),
                }),
                None => {}
            }
            for o in &outcomes {
                rows.push(set.digital_row(o, grid, rho, snr, eval_seed)?);
            }
        }
    }
    Ok(RateReport { skipped, ..RateReport::new(rows) })
}
