//! Per-iteration telemetry and its CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Column order of `records.csv`.
pub const HEADER: [&str; 18] = [
    "run_id",
    "iter",
    "epoch",
    "loss",
    "lr_min",
    "lr_mean",
    "lr_max",
    "miss",
    "cum_miss_rate",
    "w1",
    "w2",
    "accuracy",
    "f1_min",
    "f1_max",
    "recall_min",
    "recall_max",
    "precision_min",
    "precision_max",
];

/// One row. Row `iter = 0` is the starting point; row `t` describes step `t`:
/// `loss` is measured before the step, the rates are those the step used, and
/// `w1`/`w2` and the metrics are taken after it. Metrics appear only on the
/// last row of an epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub run_id: String,
    pub iter: u64,
    pub epoch: u64,
    pub loss: Option<f64>,
    pub lr_min: Option<f64>,
    pub lr_mean: Option<f64>,
    pub lr_max: Option<f64>,
    pub miss: Option<u8>,
    pub cum_miss_rate: Option<f64>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1_min: Option<f64>,
    pub f1_max: Option<f64>,
    pub recall_min: Option<f64>,
    pub recall_max: Option<f64>,
    pub precision_min: Option<f64>,
    pub precision_max: Option<f64>,
}

impl Record {
    /// `max(|w1|, |w2|)` over the logged coordinates.
    pub fn w_inf(&self) -> Option<f64> {
        match (self.w1, self.w2) {
            (Some(a), Some(b)) => Some(a.abs().max(b.abs())),
            (Some(a), None) => Some(a.abs()),
            _ => None,
        }
    }
}

pub fn to_csv_bytes(records: &[Record]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| BenchError::Records {
        path: "records.csv".into(),
        message: e.to_string(),
    };
    w.write_record(HEADER).map_err(fail)?;
    for r in records {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| BenchError::Records {
        path: "records.csv".into(),
        message: e.to_string(),
    })
}

pub fn write_csv(path: &Path, records: &[Record]) -> Result<()> {
    std::fs::write(path, to_csv_bytes(records)?).map_err(BenchError::io(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<Record>> {
    let fail = |message: String| BenchError::Records {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let header = rdr.headers().map_err(|e| fail(e.to_string()))?.clone();
    if header.iter().ne(HEADER) {
        return Err(fail(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let records = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<Record>, _>>()
        .map_err(|e| fail(e.to_string()))?;
    if records.is_empty() {
        return Err(fail("no records".into()));
    }
    Ok(records)
}

/// First iteration whose `value` is at or below `tol`.
pub fn first_iter_at_or_below(records: &[Record], tol: f64, value: impl Fn(&Record) -> Option<f64>) -> Option<u64> {
    records
        .iter()
        .find(|r| value(r).is_some_and(|v| v <= tol))
        .map(|r| r.iter)
}
