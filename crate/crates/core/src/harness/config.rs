//! Declarative experiment configuration, loadable from JSON or TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::Execution;
use crate::learner::AlgorithmConstants;
use crate::solver::SolverOptions;
use crate::world::{MarginalKind, NoiseModel};

/// How the final classifier's error is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMethodChoice {
    /// Exact angle formula when valid (Gaussian, realizable), Monte Carlo otherwise.
    #[default]
    Auto,
    ExactAngle,
    MonteCarlo,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineToggles {
    /// Single-shot hinge minimization on i.i.d. labels.
    pub passive: bool,
    /// The active learner run with `t = d`.
    pub fulldim: bool,
    /// Label budget for the passive baseline; defaults to the active schedule's total.
    pub passive_budget: Option<usize>,
}

/// Candidate constants for `tune`. Empty axes fall back to the base constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneGrid {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    /// Fraction of seeds that must reach error at most epsilon.
    pub success_target: f64,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            c1: Vec::new(),
            c2: Vec::new(),
            c3: Vec::new(),
            success_target: 0.9,
        }
    }
}

/// Axes of a parameter sweep. Empty axes fall back to the base config value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub d: Vec<usize>,
    pub t: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub noise: Vec<NoiseModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub t: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub marginal: MarginalKind,
    pub noise: NoiseModel,
    pub constants: AlgorithmConstants,
    pub solver: SolverOptions,
    pub seeds: Vec<u64>,
    pub baselines: BaselineToggles,
    pub error_method: ErrorMethodChoice,
    /// Test-set size for Monte Carlo error estimates.
    pub error_samples: usize,
    /// Write elapsed wall time into records; disable for byte-identical reruns.
    pub record_wall_time: bool,
    pub execution: Execution,
    pub output: Option<PathBuf>,
    pub grid: SweepGrid,
    pub tune: TuneGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 200,
            t: 5,
            epsilon: 0.05,
            delta: 0.1,
            marginal: MarginalKind::StandardGaussian,
            noise: NoiseModel::Realizable,
            constants: AlgorithmConstants::default(),
            solver: SolverOptions::default(),
            seeds: vec![0],
            baselines: BaselineToggles::default(),
            error_method: ErrorMethodChoice::Auto,
            error_samples: 100_000,
            record_wall_time: true,
            execution: Execution::default(),
            output: None,
            grid: SweepGrid::default(),
            tune: TuneGrid::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.t == 0 || self.t > self.d {
            return Err(param(format!("need 1 <= t <= d, got t = {}, d = {}", self.t, self.d)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(param(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if self.seeds.is_empty() {
            return Err(param("seed list is empty"));
        }
        if self.error_samples == 0 {
            return Err(param("error_samples must be positive"));
        }
        if self.error_method == ErrorMethodChoice::ExactAngle && !self.exact_angle_valid() {
            return Err(param("exact-angle error needs a Gaussian marginal and realizable labels"));
        }
        if !(0.0..=1.0).contains(&self.tune.success_target) {
            return Err(param("tune success_target must lie in [0, 1]"));
        }
        self.noise.validate()?;
        self.constants.validate()?;
        self.solver.validate()
    }

    pub(crate) fn exact_angle_valid(&self) -> bool {
        self.marginal == MarginalKind::StandardGaussian && self.noise == NoiseModel::Realizable
    }

    /// Parses a config document; TOML unless the path ends in `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    /// Stable 64-bit hash of everything that determines a run except the
    /// seed list, output location, execution strategy and sweep/tune grids.
    pub fn config_hash(&self) -> String {
        let key = HashKey {
            d: self.d,
            t: self.t,
            epsilon: self.epsilon,
            delta: self.delta,
            marginal: self.marginal,
            noise: self.noise,
            constants: self.constants,
            solver: self.solver,
            error_method: self.error_method,
            error_samples: self.error_samples,
        };
        let bytes = serde_json::to_vec(&key).expect("hash key serializes");
        format!("{:016x}", fnv1a(&bytes))
    }

    /// Expands the sweep grid into one config per cell (seeds are shared).
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let ds = or_base(&self.grid.d, self.d);
        let ts = or_base(&self.grid.t, self.t);
        let eps = or_base(&self.grid.epsilon, self.epsilon);
        let noises = or_base(&self.grid.noise, self.noise);
        let mut out = Vec::new();
        for &d in &ds {
            for &t in &ts {
                for &epsilon in &eps {
                    for &noise in &noises {
                        out.push(ExperimentConfig {
                            d,
                            t,
                            epsilon,
                            noise,
                            grid: SweepGrid::default(),
                            ..self.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

#[derive(Serialize)]
struct HashKey {
    d: usize,
    t: usize,
    epsilon: f64,
    delta: f64,
    marginal: MarginalKind,
    noise: NoiseModel,
    constants: AlgorithmConstants,
    solver: SolverOptions,
    error_method: ErrorMethodChoice,
    error_samples: usize,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3))
}
