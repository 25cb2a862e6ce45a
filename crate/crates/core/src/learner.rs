//! The epoch schedule and the margin-based active learning loop with hard
//! thresholding.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::RngState;
use crate::sampler::{draw_from_band, Band, EpochCounts, QueryLedger};
use crate::solver::{minimize_hinge, ConstraintSet, SolverOptions};
use crate::vector::{angle, hard_threshold, normalize, WeightVector};
use crate::world::{SparseTarget, World};

/// Constants that scale the sample sizes, band widths and hinge scales.
///
/// The defaults were picked by the `tune` grid search on realizable Gaussian
/// worlds; see the README for the command that reproduces them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConstants {
    /// Sample size multiplier.
    pub c1: f64,
    /// Band width at epoch zero.
    pub c2: f64,
    /// Hinge scale at epoch zero.
    pub c3: f64,
    /// Angle-to-disagreement constant; `pi` is exact for rotationally
    /// invariant marginals.
    pub angle_constant: f64,
}

impl Default for AlgorithmConstants {
    fn default() -> Self {
        Self {
            c1: 0.5,
            c2: 1.0,
            c3: 0.25,
            angle_constant: std::f64::consts::PI,
        }
    }
}

impl AlgorithmConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.c3, self.angle_constant];
        if all.iter().all(|c| *c > 0.0 && c.is_finite()) {
            Ok(())
        } else {
            Err(param(format!("algorithm constants must be positive and finite: {self:?}")))
        }
    }
}

/// Parameters of one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochParams {
    pub k: usize,
    pub sample_size: usize,
    pub band_width: f64,
    pub l2_radius: f64,
    pub l1_radius: f64,
    pub tau: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub d: usize,
    pub t: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub constants: AlgorithmConstants,
    /// Index of the last epoch.
    pub k0: usize,
    pub epochs: Vec<EpochParams>,
}

/// Number of the final epoch, `ceil(log2(1 / (C1 eps)))`, floored at zero.
pub fn final_epoch(angle_constant: f64, epsilon: f64) -> usize {
    let raw = (1.0 / (angle_constant * epsilon)).log2();
    // Absorb rounding so exact powers of two are not pushed to the next integer.
    let k = (raw - 1e-9).ceil();
    if k <= 0.0 {
        0
    } else {
        k as usize
    }
}

/// `delta / ((k + 1)(k + 2))`; these sum to at most `delta` over all epochs.
pub fn epoch_delta(delta: f64, k: usize) -> f64 {
    delta / ((k + 1) as f64 * (k + 2) as f64)
}

/// `2^-(k+3)`.
pub fn l2_radius(k: usize) -> f64 {
    (-(k as f64) - 3.0).exp2()
}

pub fn l1_radius(t: usize, k: usize) -> f64 {
    (2.0 * t as f64).sqrt() * l2_radius(k)
}

impl EpochSchedule {
    pub fn build(d: usize, t: usize, epsilon: f64, delta: f64, constants: AlgorithmConstants) -> Result<Self> {
        if d == 0 || t < 1 || t > d {
            return Err(param(format!("sparsity t = {t} must lie in 1..={d}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(param(format!("epsilon = {epsilon} outside (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(param(format!("delta = {delta} outside (0, 1)")));
        }
        constants.validate()?;
        let k0 = final_epoch(constants.angle_constant, epsilon);
        let epochs = (0..=k0)
            .map(|k| {
                let dk = epoch_delta(delta, k);
                let log_term = (d as f64).ln() + (1.0 / epsilon).ln() + (1.0 / dk).ln();
                let halving = (-(k as f64)).exp2();
                EpochParams {
                    k,
                    sample_size: (constants.c1 * t as f64 * log_term.powi(3)).ceil().max(1.0) as usize,
                    band_width: constants.c2 * halving,
                    l2_radius: l2_radius(k),
                    l1_radius: l1_radius(t, k),
                    tau: constants.c3 * halving,
                    delta: dk,
                }
            })
            .collect();
        Ok(Self {
            d,
            t,
            epsilon,
            delta,
            constants,
            k0,
            epochs,
        })
    }

    pub fn total_labels(&self) -> u64 {
        self.epochs.iter().map(|e| e.sample_size as u64).sum()
    }

    /// Sampling region of epoch `k` given the previous iterate.
    pub fn band(&self, k: usize, previous: &WeightVector) -> Result<Band> {
        if k == 0 {
            Ok(Band::FullSpace)
        } else {
            Band::slab(previous.clone(), self.epochs[k].band_width)
        }
    }

    /// Constraint set of epoch `k` given the previous iterate.
    pub fn constraint(&self, k: usize, previous: &WeightVector) -> Result<ConstraintSet> {
        if k == 0 {
            ConstraintSet::new(WeightVector::zeros(self.d), 1.0, (self.t as f64).sqrt())
        } else {
            let e = &self.epochs[k];
            ConstraintSet::new(previous.clone(), e.l2_radius, e.l1_radius)
        }
    }
}

/// Whether `u` lies in the constraint set of epoch `k_next`, centred at `w`.
pub fn target_in_constraint(target: &SparseTarget, w: &WeightVector, k_next: usize, t: usize) -> bool {
    if k_next == 0 {
        return target.u.norm_l2() <= 1.0 + 1e-12 && target.u.norm_l1() <= (t as f64).sqrt() + 1e-12;
    }
    target.u.distance_l2(w) <= l2_radius(k_next) && target.u.distance_l1(w) <= l1_radius(t, k_next)
}

/// Whether the epoch's observable iterate `w_k` keeps `u` inside `W_{k+1}`.
pub fn check_invariant_u_in_w(target: &SparseTarget, w_prev: &WeightVector, k_next: usize, schedule: &EpochSchedule) -> bool {
    target_in_constraint(target, w_prev, k_next, schedule.t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
    pub projection_warnings: usize,
}

/// Observations recorded after each epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub k: usize,
    pub w: WeightVector,
    /// Angle between the unthresholded solution and the target.
    pub theta_solution: Option<f64>,
    pub theta_to_target: Option<f64>,
    pub target_in_next: Option<bool>,
    pub solver: SolverSummary,
    pub counts: EpochCounts,
    pub restarted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerOutput {
    pub w: WeightVector,
    pub traces: Vec<EpochTrace>,
    pub ledger: QueryLedger,
}

impl LearnerOutput {
    /// Fraction of epochs after which the target stayed in the next constraint set.
    pub fn invariant_rate(&self) -> Option<f64> {
        let flags: Vec<bool> = self.traces.iter().filter_map(|t| t.target_in_next).collect();
        if flags.is_empty() {
            None
        } else {
            Some(flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
        }
    }
}

/// Runs every epoch of the schedule against the world's label oracle.
///
/// The world's target is only used for instrumentation (angles and
/// constraint-membership checks in the traces); it never influences the
/// iterates.
pub fn run(world: &World, schedule: &EpochSchedule, solver: &SolverOptions, rng: &mut RngState) -> Result<LearnerOutput> {
    if world.dim() != schedule.d {
        return Err(param(format!("schedule built for d = {} but world has d = {}", schedule.d, world.dim())));
    }
    solver.validate()?;
    let d = schedule.d;
    let mut ledger = QueryLedger::new();
    let mut traces = Vec::with_capacity(schedule.k0 + 1);
    let mut w = WeightVector::zeros(d);

    for k in 0..=schedule.k0 {
        let band = schedule.band(k, &w)?;
        let cons = schedule.constraint(k, &w)?;
        let tau = schedule.epochs[k].tau;
        let mut n = schedule.epochs[k].sample_size;
        let mut restarted = false;
        let (next, report) = loop {
            let sample = draw_from_band(&band, n, world, &mut ledger, k, rng)?;
            let report = minimize_hinge(&sample, &cons, tau, solver)?;
            let sparse = hard_threshold(&report.iterate, schedule.t)?;
            match normalize(&sparse) {
                Ok(next) => break (next, report),
                Err(Error::Degenerate(_)) if !restarted => {
                    restarted = true;
                    n *= 2;
                }
                Err(Error::Degenerate(_)) => return Err(Error::ZeroAfterThreshold { epoch: k }),
                Err(e) => return Err(e),
            }
        };
        let u = &world.target.u;
        traces.push(EpochTrace {
            k,
            theta_solution: angle(&report.iterate, u).ok(),
            theta_to_target: angle(&next, u).ok(),
            target_in_next: Some(check_invariant_u_in_w(&world.target, &next, k + 1, schedule)),
            solver: SolverSummary {
                iterations: report.iterations,
                final_loss: report.final_loss,
                converged: report.converged,
                projection_warnings: report.projection_warnings,
            },
            counts: ledger.epoch(k),
            restarted,
            w: next.clone(),
        });
        w = next;
    }
    Ok(LearnerOutput { w, traces, ledger })
}
