//! Attribute-efficient PAC active learning of sparse homogeneous halfspaces.
//!
//! The learner proceeds in epochs. Each epoch samples from a shrinking margin
//! band around the current hypothesis, minimizes a scaled hinge loss over the
//! intersection of an l2 and an l1 ball centred on that hypothesis, then hard
//! thresholds and renormalizes the solution so the iterate stays `t`-sparse.
//!
//! Module map:
//!
//! * [`vector`]: dense kernels, hard thresholding, ball projections.
//! * [`world`]: synthetic marginals, sparse targets and noisy label oracles.
//! * [`sampler`]: rejection sampling from margin bands with query accounting.
//! * [`solver`]: projected subgradient descent for the constrained hinge loss.
//! * [`learner`]: epoch schedule and the active learning loop.
//! * [`harness`]: error estimation, baselines, sweeps, tuning and CSV output.
//! * [`exec`]: sequential or rayon-backed execution of independent work items.

pub mod error;
pub mod exec;
pub mod harness;
pub mod learner;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod vector;
pub mod world;

pub use error::{Error, Result};
pub use exec::Execution;
pub use learner::{AlgorithmConstants, EpochSchedule, EpochTrace, LearnerOutput};
pub use rng::RngState;
pub use sampler::{Band, QueryLedger};
pub use solver::{ConstraintSet, SolverOptions, SolverReport};
pub use vector::{Ball, NormKind, WeightVector};
pub use world::{LabeledExample, Marginal, NoiseModel, SparseTarget, World};
