//! Per-run results and their CSV encoding.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 19] = [
    "config_hash",
    "seed",
    "d",
    "t",
    "epsilon",
    "delta",
    "noise_kind",
    "noise_param",
    "algorithm",
    "labels_total",
    "unlabeled_total",
    "rejected_total",
    "err_estimate",
    "err_stderr",
    "theta_final",
    "k0",
    "wall_ms",
    "invariant_u_in_W_rate",
    "status",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Active,
    Passive,
    Fulldim,
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub config_hash: String,
    pub seed: u64,
    pub d: usize,
    pub t: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub noise_kind: String,
    pub noise_param: f64,
    pub algorithm: Algorithm,
    pub labels_total: u64,
    pub unlabeled_total: u64,
    pub rejected_total: u64,
    pub err_estimate: Option<f64>,
    pub err_stderr: Option<f64>,
    pub theta_final: Option<f64>,
    pub k0: usize,
    pub wall_ms: u64,
    #[serde(rename = "invariant_u_in_W_rate")]
    pub invariant_u_in_w_rate: Option<f64>,
    pub status: String,
}

impl CsvRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn sort_key(&self) -> (&str, Algorithm, u64) {
        (&self.config_hash, self.algorithm, self.seed)
    }
}

/// Everything observed in one trial; [`RunRecord::row`] is the CSV projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub row: CsvRow,
    pub labels_per_epoch: Vec<u64>,
    pub theta_trace: Vec<f64>,
    pub invariant_trace: Vec<bool>,
    /// Error of the target halfspace on the same test draws (Monte Carlo only).
    pub target_error: Option<f64>,
    /// Learned error minus target error when the target is Bayes optimal.
    pub excess_error: Option<f64>,
    /// Disagreement rate with the target halfspace.
    pub disagreement: Option<f64>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.row.is_ok()
    }
}

pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_rows<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

/// Writes `rows` sorted by (config hash, algorithm, seed).
pub fn write_sorted_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), &rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    read_rows(std::fs::File::open(path)?)
}

pub fn to_csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
