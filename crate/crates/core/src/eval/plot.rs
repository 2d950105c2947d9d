use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::report::{RateReport, RateRow};
use crate::error::{Error, Result};
use crate::linkphys::Scheme;

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn label(r: &RateRow) -> String {
    match r.lambda {
        Some(l) => format!("{} (lambda={l})", r.scheme),
        None => r.scheme.to_string(),
    }
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(140, 86, 75),
    RGBColor(23, 190, 207),
    RGBColor(127, 127, 127),
];

/// Rate-vs-ρ figure for one uplink SNR: every scheme curve plus bound and floor.
pub fn plot_rate_vs_rho(report: &RateReport, snr_fb_db: f64, path: &Path) -> Result<()> {
    let rows: Vec<&RateRow> = report.rows.iter().filter(|r| r.snr_fb_db == snr_fb_db).collect();
    if rows.is_empty() {
        return Err(Error::Empty(format!("no rows at snr_fb_db = {snr_fb_db}")));
    }
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        curves.entry(label(r)).or_default().push((r.rho, r.mean_rate_bps_hz));
    }
    for pts in curves.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let (x_lo, x_hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.rho), hi.max(r.rho)));
    let (x_lo, x_hi) = if x_lo < x_hi { (x_lo, x_hi) } else { (x_lo * 0.5, x_hi * 2.0) };
    let y_hi = rows.iter().map(|r| r.mean_rate_bps_hz).fold(0.0, f64::max) * 1.1 + 1e-3;

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("Average downlink rate, uplink SNR {snr_fb_db} dB"), ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(56)
        .build_cartesian_2d((x_lo..x_hi).log_scale(), 0.0..y_hi)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("feedback overhead rho").y_desc("rate (bps/Hz)").draw().map_err(plot_err)?;
    for (k, (name, pts)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dashed = name == Scheme::Perfect.as_str() || name == Scheme::Average.as_str();
        let style = ShapeStyle { color: color.to_rgba(), filled: false, stroke_width: if dashed { 1 } else { 2 } };
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), style))
            .map_err(plot_err)?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        if !dashed {
            chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// File name of the figure for one uplink SNR.
pub fn plot_name(snr_fb_db: f64) -> String {
    format!("rate_vs_rho_snr{snr_fb_db}.svg")
}

/// Writes `report.csv`, `skipped.csv` when points were skipped, and one figure per uplink SNR.
pub fn emit(report: &RateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("report.csv");
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    report.write_csv(std::io::BufWriter::new(f))?;
    written.push(csv_path);
    if !report.skipped.is_empty() {
        let p = dir.join("skipped.csv");
        let mut w = csv::Writer::from_path(&p)?;
        for s in &report.skipped {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    let mut snrs: Vec<f64> = report.rows.iter().map(|r| r.snr_fb_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    for snr in snrs {
        let p = dir.join(plot_name(snr));
        plot_rate_vs_rho(report, snr, &p)?;
        written.push(p);
    }
    Ok(written)
}
