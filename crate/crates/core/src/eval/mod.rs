//! Experiment surfaces: rate-vs-overhead sweeps per uplink SNR, the
//! perfect-CSI bound and average-CSI floor, the digital λ-envelope,
//! analog-vs-digital deltas, report invariants, and CSV/SVG output.

mod check;
mod compare;
mod plot;
mod report;
mod sweep;

pub use check::{check_report, Violation, RATE_SLACK};
pub use compare::{compare, digital_envelope, max_gap, DeltaRow};
pub use plot::{emit, plot_name, plot_rate_vs_rho};
pub use report::{RateReport, RateRow, SkippedPoint, CSV_HEADER};
pub use sweep::{analog_noise_seed, average_csi_rate, perfect_csi_rate, sweep, DigitalOutcomes, EvalSet, SweepGrid};
