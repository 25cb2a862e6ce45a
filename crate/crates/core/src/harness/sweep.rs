//! Parameter sweeps over grid cells and seeds, with CSV output and summary
//! tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{param, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::record::{sort_rows, write_sorted_csv, Algorithm, CsvRow, RunRecord};
use crate::harness::trial::{run_active, run_baseline_fulldim, run_baseline_passive};

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Records sorted by (config hash, algorithm, seed).
    pub records: Vec<RunRecord>,
    pub failures: usize,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.records.iter().map(|r| r.row.clone()).collect()
    }
}

struct Job {
    cell: usize,
    seed: u64,
    algorithm: Algorithm,
}

/// Runs every (cell, seed, algorithm) combination as an independent trial.
///
/// A failing trial becomes a record with a `failed: ...` status. When the
/// config names an output path, rows are appended to `<output>.partial` as
/// trials finish and the sorted CSV replaces it at the end.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    if config.seeds.is_empty() {
        return Err(param("seed list is empty"));
    }
    let cells = config.cells();
    let mut algorithms = vec![Algorithm::Active];
    if config.baselines.passive {
        algorithms.push(Algorithm::Passive);
    }
    if config.baselines.fulldim {
        algorithms.push(Algorithm::Fulldim);
    }
    let jobs: Vec<Job> = (0..cells.len())
        .flat_map(|cell| {
            let algorithms = &algorithms;
            config.seeds.iter().flat_map(move |&seed| {
                algorithms.iter().map(move |&algorithm| Job { cell, seed, algorithm })
            })
        })
        .collect();

    let stream = match &config.output {
        Some(path) => Some(Mutex::new(PartialWriter::create(path)?)),
        None => None,
    };
    let mut records = config.execution.map(&jobs, |job| {
        let cell = &cells[job.cell];
        let record = match job.algorithm {
            Algorithm::Active => run_active(cell, job.seed),
            Algorithm::Passive => run_baseline_passive(cell, job.seed),
            Algorithm::Fulldim => run_baseline_fulldim(cell, job.seed),
        };
        if let Some(s) = &stream {
            // Streaming is best effort; the sorted CSV below is authoritative.
            let _ = s.lock().map(|mut w| w.append(&record.row));
        }
        record
    });
    records.sort_by(|a, b| {
        (&a.row.config_hash, a.row.algorithm, a.row.seed).cmp(&(&b.row.config_hash, b.row.algorithm, b.row.seed))
    });
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    let outcome = SweepOutcome { records, failures };

    if let Some(path) = &config.output {
        write_sorted_csv(path, &outcome.rows())?;
        if let Some(s) = stream {
            let partial = s.into_inner().map(|w| w.path).unwrap_or_else(|e| e.into_inner().path);
            let _ = std::fs::remove_file(partial);
        }
    }
    Ok(outcome)
}

struct PartialWriter {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl PartialWriter {
    fn create(output: &Path) -> Result<Self> {
        if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut name = output.as_os_str().to_owned();
        name.push(".partial");
        let path = PathBuf::from(name);
        let writer = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        Ok(Self { path, writer })
    }

    fn append(&mut self, row: &CsvRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Median and interquartile range of error, angle and label totals, grouped
/// by config hash and algorithm.
pub fn summary_table(rows: &[CsvRow]) -> String {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut groups: BTreeMap<(String, Algorithm), Vec<&CsvRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry((r.config_hash.clone(), r.algorithm)).or_default().push(r);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<8} {:>6} {:>4} {:>7} {:<26} {:>5} {:>6} {:>21} {:>21} {:>19}",
        "config", "algo", "d", "t", "eps", "noise", "ok", "failed", "err median [IQR]", "theta median [IQR]", "labels median [IQR]"
    );
    for ((hash, algo), group) in groups {
        let first = group[0];
        let ok: Vec<&&CsvRow> = group.iter().filter(|r| r.is_ok()).collect();
        let errs: Vec<f64> = ok.iter().filter_map(|r| r.err_estimate).collect();
        let thetas: Vec<f64> = ok.iter().filter_map(|r| r.theta_final).collect();
        let labels: Vec<f64> = ok.iter().map(|r| r.labels_total as f64).collect();
        let noise = format!("{}({})", first.noise_kind, first.noise_param);
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>6} {:>4} {:>7} {:<26} {:>5} {:>6} {:>21} {:>21} {:>19}",
            hash,
            format!("{algo:?}").to_lowercase(),
            first.d,
            first.t,
            first.epsilon,
            noise,
            ok.len(),
            group.len() - ok.len(),
            fmt_quartiles(&errs, 4),
            fmt_quartiles(&thetas, 4),
            fmt_quartiles(&labels, 0),
        );
    }
    out
}

fn fmt_quartiles(values: &[f64], precision: usize) -> String {
    match quartiles(values) {
        Some((q1, med, q3)) => format!("{med:.precision$} [{:.precision$}]", q3 - q1),
        None => "-".to_string(),
    }
}

/// First quartile, median and third quartile by linear interpolation.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Some((quantile_sorted(&v, 0.25), quantile_sorted(&v, 0.5), quantile_sorted(&v, 0.75)))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quartiles(values).map(|q| q.1)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
