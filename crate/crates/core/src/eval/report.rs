use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkphys::Scheme;

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "rho",
    "snr_fb_db",
    "snr_dl_db",
    "lambda",
    "mean_rate_bps_hz",
    "mean_nmse_db",
    "failure_rate",
    "n_samples",
    "seed",
];

/// One aggregated grid point. Serialized field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scheme: Scheme,
    pub rho: f64,
    pub snr_fb_db: f64,
    pub snr_dl_db: f64,
    pub lambda: Option<f64>,
    pub mean_rate_bps_hz: f64,
    pub mean_nmse_db: f64,
    pub failure_rate: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// A grid point the sweep could not evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub scheme: Scheme,
    pub rho: f64,
    pub snr_fb_db: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub skipped: Vec<SkippedPoint>,
}

fn row_order(a: &RateRow, b: &RateRow) -> Ordering {
    a.scheme
        .as_str()
        .cmp(b.scheme.as_str())
        .then(a.snr_fb_db.total_cmp(&b.snr_fb_db))
        .then(a.rho.total_cmp(&b.rho))
        .then(match (a.lambda, b.lambda) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y),
        })
}

impl RateReport {
    pub fn new(mut rows: Vec<RateRow>) -> Self {
        rows.sort_by(row_order);
        Self { rows, skipped: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows of one scheme, in report order.
    pub fn scheme(&self, scheme: Scheme) -> impl Iterator<Item = &RateRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    /// Merges several reports and restores the canonical order.
    pub fn merge(reports: impl IntoIterator<Item = RateReport>) -> Self {
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for r in reports {
            rows.extend(r.rows);
            skipped.extend(r.skipped);
        }
        Self { skipped, ..Self::new(rows) }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Corrupt(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::Corrupt(format!("unexpected CSV header {header:?}")));
        }
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<RateRow>, _>>()?;
        Ok(Self { rows, skipped: Vec::new() })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: Scheme, rho: f64, lambda: Option<f64>) -> RateRow {
        RateRow {
            scheme,
            rho,
            snr_fb_db: 10.0,
            snr_dl_db: 10.0,
            lambda,
            mean_rate_bps_hz: 1.5,
            mean_nmse_db: -7.25,
            failure_rate: 0.0,
            n_samples: 4,
            seed: 9,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            RateReport::default().to_csv_string().unwrap(),
            "scheme,rho,snr_fb_db,snr_dl_db,lambda,mean_rate_bps_hz,mean_nmse_db,failure_rate,n_samples,seed\n"
        );
    }

    #[test]
    fn missing_lambda_is_an_empty_field_and_round_trips() {
        let rep = RateReport::new(vec![row(Scheme::Digital, 0.25, Some(0.001)), row(Scheme::Analog, 0.5, None)]);
        let text = rep.to_csv_string().unwrap();
        assert!(text.contains("\nanalog,0.5,10.0,10.0,,1.5,-7.25,0.0,4,9\n"), "{text}");
        assert_eq!(RateReport::read_csv(text.as_bytes()).unwrap().rows, rep.rows);
    }

    #[test]
    fn rows_sorted_by_scheme_snr_rho_lambda() {
        let mut a = row(Scheme::Digital, 0.5, Some(0.1));
        a.snr_fb_db = 5.0;
        let rep = RateReport::new(vec![
            row(Scheme::Perfect, 0.25, None),
            row(Scheme::Digital, 0.25, Some(0.1)),
            row(Scheme::Digital, 0.25, Some(0.01)),
            a.clone(),
            row(Scheme::Analog, 0.25, None),
        ]);
        let order: Vec<(Scheme, f64, Option<f64>)> = rep.rows.iter().map(|r| (r.scheme, r.rho, r.lambda)).collect();
        assert_eq!(
            order,
            vec![
                (Scheme::Analog, 0.25, None),
                (Scheme::Digital, 0.5, Some(0.1)),
                (Scheme::Digital, 0.25, Some(0.01)),
                (Scheme::Digital, 0.25, Some(0.1)),
                (Scheme::Perfect, 0.25, None),
            ]
        );
    }
}
