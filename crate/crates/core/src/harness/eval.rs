//! Error estimation for a learned halfspace.

use crate::error::{param, Result};
use crate::exec::Execution;
use crate::rng::RngState;
use crate::vector::{angle, dot, WeightVector};
use crate::world::{Label, MarginalKind, NoiseModel, World};

const BATCH: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMethod {
    /// `theta(w, u) / pi`; exact for Gaussian marginals with realizable labels.
    ExactAngle,
    /// Fraction of `m` fresh oracle-labelled draws that `w` misclassifies.
    MonteCarlo(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl ErrorEstimate {
    fn from_counts(mistakes: u64, m: usize) -> Self {
        let p = mistakes as f64 / m as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / m as f64).sqrt(),
        }
    }
}

/// Monte Carlo errors of the learned classifier and of the target on the
/// same test draws, plus their disagreement rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedErrors {
    pub learned: ErrorEstimate,
    pub target: ErrorEstimate,
    pub disagreement: ErrorEstimate,
}

pub fn estimate_error(
    w: &WeightVector,
    world: &World,
    method: ErrorMethod,
    rng: &RngState,
    exec: Execution,
) -> Result<ErrorEstimate> {
    match method {
        ErrorMethod::ExactAngle => {
            if world.marginal.kind != MarginalKind::StandardGaussian || world.noise != NoiseModel::Realizable {
                return Err(param("exact-angle error needs a Gaussian marginal and realizable labels"));
            }
            Ok(ErrorEstimate {
                estimate: angle(w, &world.target.u)? / std::f64::consts::PI,
                stderr: 0.0,
            })
        }
        ErrorMethod::MonteCarlo(m) => Ok(paired_monte_carlo(w, world, m, rng, exec)?.learned),
    }
}

pub fn paired_monte_carlo(
    w: &WeightVector,
    world: &World,
    m: usize,
    rng: &RngState,
    exec: Execution,
) -> Result<PairedErrors> {
    if m == 0 {
        return Err(param("Monte Carlo test size must be positive"));
    }
    if w.dim() != world.dim() {
        return Err(param("classifier dimension does not match the world"));
    }
    let batches = m.div_ceil(BATCH);
    let counts = exec.map_indexed(batches, |b| {
        let size = BATCH.min(m - b * BATCH);
        let mut rng = rng.fork(b as u64);
        let mut x = vec![0.0; world.dim()];
        let (mut learned, mut target, mut disagree) = (0u64, 0u64, 0u64);
        for _ in 0..size {
            world.marginal.sample_into(&mut x, &mut rng);
            let y = world.label_slice(&x, &mut rng);
            let hw = Label::from_margin(dot(w.as_slice(), &x));
            let hu = Label::from_margin(dot(world.target.u.as_slice(), &x));
            learned += u64::from(hw != y);
            target += u64::from(hu != y);
            disagree += u64::from(hw != hu);
        }
        (learned, target, disagree)
    });
    let (l, t, d) = counts
        .into_iter()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    Ok(PairedErrors {
        learned: ErrorEstimate::from_counts(l, m),
        target: ErrorEstimate::from_counts(t, m),
        disagreement: ErrorEstimate::from_counts(d, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{BoundedProfile, Marginal, SparseTarget};
    use std::f64::consts::PI;

    fn world2(noise: NoiseModel) -> World {
        let target = SparseTarget::from_vector(WeightVector::new(vec![1.0, 0.0]).unwrap(), 1).unwrap();
        World::new(Marginal::gaussian(2), target, noise).unwrap()
    }

    #[test]
    fn exact_angle_cases() {
        let w = world2(NoiseModel::Realizable);
        let rng = RngState::new(0, 0);
        let e = estimate_error(&w.target.u, &w, ErrorMethod::ExactAngle, &rng, Execution::Sequential).unwrap();
        assert_eq!(e.estimate, 0.0);
        let ortho = WeightVector::new(vec![0.0, 1.0]).unwrap();
        let e = estimate_error(&ortho, &w, ErrorMethod::ExactAngle, &rng, Execution::Sequential).unwrap();
        assert!((e.estimate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_angle_rejected_for_noisy_worlds() {
        let w = world2(NoiseModel::Bounded {
            eta: 0.1,
            profile: BoundedProfile::Constant,
        });
        let rng = RngState::new(0, 0);
        assert!(estimate_error(&w.target.u, &w, ErrorMethod::ExactAngle, &rng, Execution::Sequential).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_exact_angle() {
        let w = world2(NoiseModel::Realizable);
        let rng = RngState::new(4, 0);
        let v = WeightVector::new(vec![(0.3f64).cos(), (0.3f64).sin()]).unwrap();
        let mc = estimate_error(&v, &w, ErrorMethod::MonteCarlo(100_000), &rng, Execution::Parallel).unwrap();
        let exact = 0.3 / PI;
        assert!((mc.estimate - exact).abs() < 3.0 * mc.stderr, "{} vs {exact}", mc.estimate);
    }

    #[test]
    fn monte_carlo_is_execution_independent() {
        let w = world2(NoiseModel::Bounded {
            eta: 0.2,
            profile: BoundedProfile::Constant,
        });
        let rng = RngState::new(5, 1);
        let v = WeightVector::new(vec![1.0, 0.2]).unwrap();
        let a = paired_monte_carlo(&v, &w, 35_000, &rng, Execution::Sequential).unwrap();
        let b = paired_monte_carlo(&v, &w, 35_000, &rng, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!((a.target.estimate - 0.2).abs() < 0.01);
    }
}
