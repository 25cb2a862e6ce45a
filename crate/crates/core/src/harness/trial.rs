//! Single trials: the active learner and the two baselines, each turned into
//! a [`RunRecord`].

use std::time::Instant;

use crate::error::{Error, Result};
use crate::harness::config::{ErrorMethodChoice, ExperimentConfig};
use crate::harness::eval::{estimate_error, paired_monte_carlo, ErrorMethod};
use crate::harness::record::{Algorithm, CsvRow, RunRecord};
use crate::learner::{self, EpochSchedule, LearnerOutput};
use crate::rng::RngState;
use crate::sampler::{draw_from_band, Band, QueryLedger};
use crate::solver::{minimize_hinge, ConstraintSet};
use crate::vector::{angle, hard_threshold, normalize, WeightVector};
use crate::world::{NoiseModel, World};

/// Stream ids derived from a trial seed. Baselines share the world stream so
/// every algorithm faces the same target for a given seed.
const WORLD_STREAM: u64 = 0;
const LEARNER_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

pub fn build_world(config: &ExperimentConfig, seed: u64) -> Result<World> {
    let mut rng = RngState::new(seed, 0).fork(WORLD_STREAM);
    World::generate(config.marginal, config.d, config.t, config.noise, &mut rng)
}

pub fn build_schedule(config: &ExperimentConfig, t: usize) -> Result<EpochSchedule> {
    EpochSchedule::build(config.d, t, config.epsilon, config.delta, config.constants)
}

fn learner_rng(seed: u64) -> RngState {
    RngState::new(seed, 0).fork(LEARNER_STREAM)
}

/// Runs the active learner with sparsity budget `t` (its own `t`, or `d`).
fn run_learner(config: &ExperimentConfig, seed: u64, t: usize) -> Result<(World, EpochSchedule, LearnerOutput)> {
    config.validate()?;
    let world = build_world(config, seed)?;
    let schedule = build_schedule(config, t)?;
    let out = learner::run(&world, &schedule, &config.solver, &mut learner_rng(seed))?;
    Ok((world, schedule, out))
}

pub fn run_active(config: &ExperimentConfig, seed: u64) -> RunRecord {
    timed(config, seed, Algorithm::Active, || {
        let (world, schedule, out) = run_learner(config, seed, config.t)?;
        Ok(Finished::from_learner(world, schedule.k0, out))
    })
}

/// The active learner with `t = d`: no sparsity is exploited.
pub fn run_baseline_fulldim(config: &ExperimentConfig, seed: u64) -> RunRecord {
    timed(config, seed, Algorithm::Fulldim, || {
        let (world, schedule, out) = run_learner(config, seed, config.d)?;
        Ok(Finished::from_learner(world, schedule.k0, out))
    })
}

/// Passive baseline: one hinge minimization over the epoch-zero constraint
/// set on `n` i.i.d. labels, then hard thresholding and normalization.
pub fn run_baseline_passive(config: &ExperimentConfig, seed: u64) -> RunRecord {
    timed(config, seed, Algorithm::Passive, || {
        config.validate()?;
        let world = build_world(config, seed)?;
        let schedule = build_schedule(config, config.t)?;
        let n = config
            .baselines
            .passive_budget
            .unwrap_or(schedule.total_labels() as usize);
        let mut rng = learner_rng(seed);
        let mut ledger = QueryLedger::new();
        let sample = draw_from_band(&Band::FullSpace, n, &world, &mut ledger, 0, &mut rng)?;
        let cons = ConstraintSet::new(WeightVector::zeros(config.d), 1.0, (config.t as f64).sqrt())?;
        let report = minimize_hinge(&sample, &cons, schedule.epochs[0].tau, &config.solver)?;
        let w = normalize(&hard_threshold(&report.iterate, config.t)?)
            .map_err(|_| Error::ZeroAfterThreshold { epoch: 0 })?;
        Ok(Finished {
            theta_trace: angle(&w, &world.target.u).into_iter().collect(),
            invariant_trace: Vec::new(),
            world,
            w,
            ledger,
            k0: 0,
        })
    })
}

struct Finished {
    world: World,
    w: WeightVector,
    ledger: QueryLedger,
    k0: usize,
    theta_trace: Vec<f64>,
    invariant_trace: Vec<bool>,
}

impl Finished {
    fn from_learner(world: World, k0: usize, out: LearnerOutput) -> Self {
        Self {
            theta_trace: out.traces.iter().filter_map(|t| t.theta_to_target).collect(),
            invariant_trace: out.traces.iter().filter_map(|t| t.target_in_next).collect(),
            world,
            w: out.w,
            ledger: out.ledger,
            k0,
        }
    }
}

fn timed<F>(config: &ExperimentConfig, seed: u64, algorithm: Algorithm, body: F) -> RunRecord
where
    F: FnOnce() -> Result<Finished>,
{
    let start = Instant::now();
    let result = body().and_then(|f| evaluate(config, seed, f));
    let wall_ms = if config.record_wall_time {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let mut record = match result {
        Ok(r) => r,
        Err(e) => failed_record(config, seed, algorithm, &e),
    };
    record.row.algorithm = algorithm;
    record.row.wall_ms = wall_ms;
    record
}

fn base_row(config: &ExperimentConfig, seed: u64) -> CsvRow {
    CsvRow {
        config_hash: config.config_hash(),
        seed,
        d: config.d,
        t: config.t,
        epsilon: config.epsilon,
        delta: config.delta,
        noise_kind: config.noise.kind_name().to_string(),
        noise_param: config.noise.rate(),
        algorithm: Algorithm::Active,
        labels_total: 0,
        unlabeled_total: 0,
        rejected_total: 0,
        err_estimate: None,
        err_stderr: None,
        theta_final: None,
        k0: 0,
        wall_ms: 0,
        invariant_u_in_w_rate: None,
        status: "ok".to_string(),
    }
}

fn failed_record(config: &ExperimentConfig, seed: u64, algorithm: Algorithm, err: &Error) -> RunRecord {
    let mut row = base_row(config, seed);
    row.algorithm = algorithm;
    row.status = format!("failed: {err}");
    RunRecord {
        row,
        labels_per_epoch: Vec::new(),
        theta_trace: Vec::new(),
        invariant_trace: Vec::new(),
        target_error: None,
        excess_error: None,
        disagreement: None,
    }
}

fn evaluate(config: &ExperimentConfig, seed: u64, f: Finished) -> Result<RunRecord> {
    let eval_rng = RngState::new(seed, 0).fork(EVAL_STREAM);
    let use_exact = match config.error_method {
        ErrorMethodChoice::ExactAngle => true,
        ErrorMethodChoice::MonteCarlo => false,
        ErrorMethodChoice::Auto => config.exact_angle_valid(),
    };
    let (err, target_error, disagreement) = if use_exact {
        let e = estimate_error(&f.w, &f.world, ErrorMethod::ExactAngle, &eval_rng, config.execution)?;
        (e, Some(0.0), Some(e.estimate))
    } else {
        let p = paired_monte_carlo(&f.w, &f.world, config.error_samples, &eval_rng, config.execution)?;
        (p.learned, Some(p.target.estimate), Some(p.disagreement.estimate))
    };
    // The target is Bayes optimal unless the noise is adversarial.
    let excess_error = match config.noise {
        NoiseModel::Adversarial { .. } => None,
        _ => target_error.map(|te| err.estimate - te),
    };
    let total = f.ledger.total();
    let mut row = base_row(config, seed);
    row.labels_total = total.queries;
    row.unlabeled_total = total.unlabeled;
    row.rejected_total = total.rejected;
    row.err_estimate = Some(err.estimate);
    row.err_stderr = Some(err.stderr);
    row.theta_final = Some(angle(&f.w, &f.world.target.u)?);
    row.k0 = f.k0;
    row.invariant_u_in_w_rate = if f.invariant_trace.is_empty() {
        None
    } else {
        Some(f.invariant_trace.iter().filter(|b| **b).count() as f64 / f.invariant_trace.len() as f64)
    };
    Ok(RunRecord {
        row,
        labels_per_epoch: f.ledger.queries_per_epoch(),
        theta_trace: f.theta_trace,
        invariant_trace: f.invariant_trace,
        target_error,
        excess_error,
        disagreement,
    })
}
