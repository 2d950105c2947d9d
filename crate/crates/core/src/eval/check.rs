use std::collections::BTreeMap;

use super::report::{RateReport, RateRow};
use crate::linkphys::Scheme;

/// Monte-Carlo slack for the floor and for monotonicity in ρ.
pub const RATE_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

fn describe(r: &RateRow) -> String {
    match r.lambda {
        Some(l) => format!("{} rho={} snr_fb={} lambda={}", r.scheme, r.rho, r.snr_fb_db, l),
        None => format!("{} rho={} snr_fb={}", r.scheme, r.rho, r.snr_fb_db),
    }
}

/// Checks row-level ranges, the floor ≤ rate ≤ bound sandwich and
/// monotonicity in ρ for every scheme curve. An empty result means the report is consistent.
pub fn check_report(report: &RateReport) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |invariant, detail| out.push(Violation { invariant, detail });
    let point = |r: &RateRow| (r.snr_fb_db.to_bits(), r.rho.to_bits(), r.snr_dl_db.to_bits());
    let perfect: BTreeMap<_, f64> = report.scheme(Scheme::Perfect).map(|r| (point(r), r.mean_rate_bps_hz)).collect();
    let floor: BTreeMap<_, f64> = report.scheme(Scheme::Average).map(|r| (point(r), r.mean_rate_bps_hz)).collect();
    let max_perfect: BTreeMap<u64, f64> = report.scheme(Scheme::Perfect).fold(BTreeMap::new(), |mut m, r| {
        let e = m.entry(r.snr_dl_db.to_bits()).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.mean_rate_bps_hz);
        m
    });

    for r in &report.rows {
        if !(0.0..=1.0).contains(&r.failure_rate) {
            v("failure_rate in [0, 1]", format!("{}: {}", describe(r), r.failure_rate));
        }
        if r.scheme == Scheme::Analog && r.failure_rate != 0.0 {
            v("analog never fails", format!("{}: {}", describe(r), r.failure_rate));
        }
        if r.mean_rate_bps_hz.is_nan() || r.mean_rate_bps_hz < 0.0 {
            v("rate non-negative", format!("{}: {}", describe(r), r.mean_rate_bps_hz));
        }
        if let Some(&bound) = max_perfect.get(&r.snr_dl_db.to_bits()) {
            if r.mean_rate_bps_hz > bound + 1e-9 {
                v("rate <= perfect-CSI bound", format!("{}: {} > {}", describe(r), r.mean_rate_bps_hz, bound));
            }
        }
        if matches!(r.scheme, Scheme::Analog | Scheme::Digital) {
            if let Some(&b) = perfect.get(&point(r)) {
                if r.mean_rate_bps_hz > b + 1e-9 {
                    v("rate <= perfect-CSI bound", format!("{}: {} > {}", describe(r), r.mean_rate_bps_hz, b));
                }
            }
            if let Some(&f) = floor.get(&point(r)) {
                if r.mean_rate_bps_hz < f - RATE_SLACK {
                    v("rate >= average-CSI floor", format!("{}: {} < {}", describe(r), r.mean_rate_bps_hz, f));
                }
            }
        }
    }

    // one curve per (scheme, snr_fb, snr_dl, λ)
    let mut curves: BTreeMap<(&str, u64, u64, Option<u64>), Vec<&RateRow>> = BTreeMap::new();
    for r in report.rows.iter().filter(|r| matches!(r.scheme, Scheme::Analog | Scheme::Digital)) {
        curves
            .entry((r.scheme.as_str(), r.snr_fb_db.to_bits(), r.snr_dl_db.to_bits(), r.lambda.map(f64::to_bits)))
            .or_default()
            .push(r);
    }
    for rows in curves.values_mut() {
        rows.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        for w in rows.windows(2) {
            if w[1].mean_rate_bps_hz < w[0].mean_rate_bps_hz - RATE_SLACK {
                v(
                    "rate non-decreasing in rho",
                    format!(
                        "{} -> rho={}: {} < {}",
                        describe(w[0]),
                        w[1].rho,
                        w[1].mean_rate_bps_hz,
                        w[0].mean_rate_bps_hz
                    ),
                );
            }
        }
    }
    out
}
