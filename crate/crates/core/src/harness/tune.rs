//! Grid search over the algorithm constants.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::record::RunRecord;
use crate::harness::sweep::median;
use crate::harness::trial::run_active;
use crate::learner::AlgorithmConstants;

#[derive(Clone, Debug, Serialize)]
pub struct TuneEntry {
    pub constants: AlgorithmConstants,
    /// Fraction of seeds whose final error estimate is at most epsilon.
    pub success_rate: f64,
    pub median_error: Option<f64>,
    pub median_theta: Option<f64>,
    /// Pooled fraction of (seed, epoch) pairs with the target inside the next constraint set.
    pub invariant_rate: Option<f64>,
    pub labels_total: u64,
    pub failures: usize,
}

impl TuneEntry {
    fn from_records(constants: AlgorithmConstants, epsilon: f64, records: &[RunRecord]) -> Self {
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
        let errs: Vec<f64> = ok.iter().filter_map(|r| r.row.err_estimate).collect();
        let thetas: Vec<f64> = ok.iter().filter_map(|r| r.row.theta_final).collect();
        let flags: Vec<bool> = ok.iter().flat_map(|r| r.invariant_trace.iter().copied()).collect();
        Self {
            constants,
            success_rate: errs.iter().filter(|e| **e <= epsilon).count() as f64 / records.len() as f64,
            median_error: median(&errs),
            median_theta: median(&thetas),
            invariant_rate: (!flags.is_empty()).then(|| flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64),
            labels_total: ok.first().map_or(0, |r| r.row.labels_total),
            failures: records.len() - ok.len(),
        }
    }

    fn qualifies(&self, target: f64) -> bool {
        self.failures == 0 && self.success_rate >= target && self.invariant_rate.unwrap_or(0.0) >= target
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TuneReport {
    pub entries: Vec<TuneEntry>,
    /// Index into `entries` of the recommended constants.
    pub recommended: usize,
    /// Whether the recommendation met the success target.
    pub meets_target: bool,
}

impl TuneReport {
    pub fn recommended_constants(&self) -> AlgorithmConstants {
        self.entries[self.recommended].constants
    }
}

pub fn candidates(config: &ExperimentConfig) -> Vec<AlgorithmConstants> {
    let base = config.constants;
    let axis = |v: &Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v.clone() };
    let mut out = Vec::new();
    for c1 in axis(&config.tune.c1, base.c1) {
        for c2 in axis(&config.tune.c2, base.c2) {
            for c3 in axis(&config.tune.c3, base.c3) {
                out.push(AlgorithmConstants { c1, c2, c3, ..base });
            }
        }
    }
    out
}

/// Runs the active learner on every candidate and seed.
///
/// Among candidates whose success rate and invariant rate both reach the
/// target, the one with the fewest labels wins (ties: lower median error).
/// If none qualifies, the highest success rate wins.
pub fn tune(config: &ExperimentConfig) -> Result<TuneReport> {
    config.validate()?;
    let cands = candidates(config);
    for c in &cands {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..cands.len())
        .flat_map(|i| config.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let records = config.execution.map(&jobs, |&(i, seed)| {
        let cfg = ExperimentConfig {
            constants: cands[i],
            ..config.clone()
        };
        run_active(&cfg, seed)
    });
    let per = config.seeds.len();
    let entries: Vec<TuneEntry> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| TuneEntry::from_records(*c, config.epsilon, &records[i * per..(i + 1) * per]))
        .collect();
    let target = config.tune.success_target;
    let err = |e: &TuneEntry| e.median_error.unwrap_or(f64::INFINITY);
    let qualified = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.qualifies(target))
        .min_by(|a, b| a.1.labels_total.cmp(&b.1.labels_total).then(err(a.1).total_cmp(&err(b.1))));
    let (recommended, meets_target) = match qualified {
        Some((i, _)) => (i, true),
        None => {
            let best = entries
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.success_rate.total_cmp(&b.1.success_rate).then(err(b.1).total_cmp(&err(a.1))))
                .map(|(i, _)| i)
                .expect("at least one candidate");
            (best, false)
        }
    };
    Ok(TuneReport {
        entries,
        recommended,
        meets_target,
    })
}

pub fn tune_table(report: &TuneReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7} {:>7} {:>7} {:>8} {:>10} {:>10} {:>10} {:>9} {:>7}",
        "c1", "c2", "c3", "success", "err med", "theta med", "invariant", "labels", "failed"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for (i, e) in report.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>7} {:>7} {:>7} {:>8.3} {:>10} {:>10} {:>10} {:>9} {:>7}{}",
            e.constants.c1,
            e.constants.c2,
            e.constants.c3,
            e.success_rate,
            opt(e.median_error),
            opt(e.median_theta),
            opt(e.invariant_rate),
            e.labels_total,
            e.failures,
            if i == report.recommended { "  <- recommended" } else { "" }
        );
    }
    out
}

/// The recommended constants as a TOML `[constants]` table.
pub fn recommended_toml(report: &TuneReport) -> String {
    #[derive(Serialize)]
    struct Doc {
        constants: AlgorithmConstants,
    }
    toml::to_string_pretty(&Doc {
        constants: report.recommended_constants(),
    })
    .expect("constants serialize")
}
