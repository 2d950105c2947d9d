use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::{RateReport, RateRow};
use crate::error::{Error, Result};
use crate::linkphys::Scheme;

/// Grid-point key with bit-exact float comparison.
fn key(r: &RateRow) -> (u64, u64, u64) {
    (r.snr_fb_db.to_bits(), r.rho.to_bits(), r.snr_dl_db.to_bits())
}

/// Per grid point, the digital row with the highest mean rate; ties go to the smaller λ.
pub fn digital_envelope(report: &RateReport) -> Result<RateReport> {
    let mut best: BTreeMap<(u64, u64, u64), &RateRow> = BTreeMap::new();
    for r in report.scheme(Scheme::Digital) {
        best.entry(key(r))
            .and_modify(|b| {
                let better = r.mean_rate_bps_hz > b.mean_rate_bps_hz
                    || (r.mean_rate_bps_hz == b.mean_rate_bps_hz
                        && r.lambda.unwrap_or(f64::INFINITY) < b.lambda.unwrap_or(f64::INFINITY));
                if better {
                    *b = r;
                }
            })
            .or_insert(r);
    }
    if best.is_empty() {
        return Err(Error::Empty("no digital rows to take an envelope over".into()));
    }
    Ok(RateReport::new(best.into_values().cloned().collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub rho: f64,
    pub snr_fb_db: f64,
    pub analog_rate: f64,
    pub digital_rate: f64,
    pub delta_bps_hz: f64,
    /// `delta / bound · 100`.
    pub delta_pct_of_bound: f64,
    pub bound: f64,
    pub floor: f64,
}

/// Analog minus digital-envelope rate at every grid point. Both reports must
/// cover exactly the same `(ρ, SNR_FB, SNR_DL)` points.
pub fn compare(analog: &RateReport, envelope: &RateReport, bound: f64, floor: f64) -> Result<Vec<DeltaRow>> {
    if bound.is_nan() || bound <= 0.0 {
        return Err(Error::config("perfect-CSI bound must be positive"));
    }
    let a: BTreeMap<_, _> = analog.scheme(Scheme::Analog).map(|r| (key(r), r)).collect();
    let d: BTreeMap<_, _> = envelope.scheme(Scheme::Digital).map(|r| (key(r), r)).collect();
    if a.len() != d.len() || a.keys().ne(d.keys()) {
        let only_a = a.keys().filter(|k| !d.contains_key(k)).count();
        let only_d = d.keys().filter(|k| !a.contains_key(k)).count();
        return Err(Error::GridMismatch(format!("{only_a} analog-only and {only_d} digital-only grid points")));
    }
    Ok(a.iter()
        .map(|(k, ra)| {
            let rd = d[k];
            let delta = ra.mean_rate_bps_hz - rd.mean_rate_bps_hz;
            DeltaRow {
                rho: ra.rho,
                snr_fb_db: ra.snr_fb_db,
                analog_rate: ra.mean_rate_bps_hz,
                digital_rate: rd.mean_rate_bps_hz,
                delta_bps_hz: delta,
                delta_pct_of_bound: 100.0 * delta / bound,
                bound,
                floor,
            }
        })
        .collect())
}

/// Largest analog−digital delta at one uplink SNR.
pub fn max_gap(deltas: &[DeltaRow], snr_fb_db: f64) -> Option<f64> {
    deltas.iter().filter(|d| d.snr_fb_db == snr_fb_db).map(|d| d.delta_bps_hz).reduce(f64::max)
}
