//! Constrained empirical hinge-loss minimization by projected subgradient
//! descent with suffix averaging.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::vector::{axpy, dot, hinge_from_margin, DykstraOptions, DykstraWorkspace, WeightVector};
use crate::world::LabeledExample;

/// The feasible set `{w : ||w - c||_2 <= r, ||w - c||_1 <= rho}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub center: WeightVector,
    pub l2_radius: f64,
    pub l1_radius: f64,
}

impl ConstraintSet {
    pub fn new(center: WeightVector, l2_radius: f64, l1_radius: f64) -> Result<Self> {
        if !(l2_radius > 0.0 && l2_radius.is_finite()) || !(l1_radius > 0.0 && l1_radius.is_finite()) {
            return Err(param(format!("constraint radii must be positive, got l2 = {l2_radius}, l1 = {l1_radius}")));
        }
        if l1_radius < l2_radius {
            return Err(param(format!("l1 radius {l1_radius} is smaller than l2 radius {l2_radius}")));
        }
        Ok(Self {
            center,
            l2_radius,
            l1_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Largest relative violation of either ball constraint.
    pub fn relative_violation(&self, w: &WeightVector) -> f64 {
        let a = w.distance_l2(&self.center) / self.l2_radius - 1.0;
        let b = w.distance_l1(&self.center) / self.l1_radius - 1.0;
        a.max(b).max(0.0)
    }

    pub fn contains(&self, w: &WeightVector, rel_tol: f64) -> bool {
        self.relative_violation(w) <= rel_tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub iterations: usize,
    pub gap_tolerance: f64,
    /// Multiplier on the step `l2_radius / sqrt(i)` taken along the normalized subgradient.
    pub step_constant: f64,
    /// Number of evenly spaced checkpoints at which the averaged iterate's loss is recorded.
    pub trace_points: usize,
    pub projection: DykstraOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            iterations: 2000,
            gap_tolerance: 1e-4,
            step_constant: 1.0,
            trace_points: 0,
            projection: DykstraOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(param("solver iterations must be at least 1"));
        }
        if !(self.gap_tolerance >= 0.0) || !(self.step_constant > 0.0) {
            return Err(param("solver gap tolerance must be >= 0 and step constant > 0"));
        }
        if !(self.projection.tolerance > 0.0) || self.projection.max_iterations == 0 {
            return Err(param("projection tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub iterate: WeightVector,
    pub iterations: usize,
    pub final_loss: f64,
    /// Mean hinge loss of the running suffix average at each checkpoint.
    pub loss_trace: Vec<f64>,
    /// Whether the averaged iterate came within `gap_tolerance` of the best
    /// iterate seen.
    pub converged: bool,
    /// Projections that hit the Dykstra iteration cap.
    pub projection_warnings: usize,
}

/// Mean scaled hinge loss of `w` over the sample.
pub fn empirical_hinge(sample: &[LabeledExample], w: &WeightVector, tau: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(param("empirical loss of an empty sample"));
    }
    if !(tau > 0.0) {
        return Err(param(format!("hinge scale must be positive, got {tau}")));
    }
    let total: f64 = sample
        .iter()
        .map(|e| hinge_from_margin(e.y.sign() * w.dot(&e.x), tau))
        .sum();
    Ok(total / sample.len() as f64)
}

/// Sample stored row-major with labels folded into the rows (`y * x`).
struct SignedDesign {
    rows: Vec<f64>,
    n: usize,
    d: usize,
}

impl SignedDesign {
    fn new(sample: &[LabeledExample], d: usize) -> Self {
        let mut rows = Vec::with_capacity(sample.len() * d);
        for e in sample {
            let s = e.y.sign();
            rows.extend(e.x.as_slice().iter().map(|v| s * v));
        }
        Self {
            rows,
            n: sample.len(),
            d,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    /// Mean hinge loss at `w`; accumulates the negated subgradient
    /// (`sum of y x` over examples with positive loss) into `grad` if given.
    fn loss_and_descent(&self, w: &[f64], tau: f64, mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut total = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            let loss = hinge_from_margin(dot(row, w), tau);
            if loss > 0.0 {
                total += loss;
                if let Some(g) = grad.as_deref_mut() {
                    axpy(1.0, row, g);
                }
            }
        }
        total / self.n as f64
    }
}

/// Approximately minimizes the mean `tau`-hinge loss over `cons`.
///
/// Starts at the constraint center, steps along the normalized negative
/// subgradient with length `step_constant * l2_radius / sqrt(i)`, projects
/// back onto the constraint set, and averages the iterates of the second
/// half of the run. The subgradient at a kink is taken to be zero.
pub fn minimize_hinge(
    sample: &[LabeledExample],
    cons: &ConstraintSet,
    tau: f64,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    if sample.is_empty() {
        return Err(param("cannot minimize over an empty sample"));
    }
    if !(tau > 0.0) {
        return Err(param(format!("hinge scale must be positive, got {tau}")));
    }
    opts.validate()?;
    let d = cons.dim();
    if sample.iter().any(|e| e.x.dim() != d) {
        return Err(param("sample dimension does not match the constraint set"));
    }

    let design = SignedDesign::new(sample, d);
    let center = cons.center.as_slice();
    let mut w = center.to_vec();
    let mut descent = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut avg_count = 0usize;
    let mut projector = DykstraWorkspace::new(d);
    let mut projection_warnings = 0;

    let t_max = opts.iterations;
    let avg_start = t_max / 2 + 1;
    let checkpoints: Vec<usize> = (1..=opts.trace_points)
        .map(|j| avg_start + (t_max - avg_start) * j / opts.trace_points.max(1))
        .collect();
    let mut loss_trace = Vec::with_capacity(opts.trace_points);

    let mut best_loss = f64::INFINITY;
    let mut best = w.clone();
    let mut iterations = 0;
    for i in 1..=t_max {
        iterations = i;
        let loss = design.loss_and_descent(&w, tau, Some(&mut descent));
        if loss < best_loss {
            best_loss = loss;
            best.copy_from_slice(&w);
        }
        if loss == 0.0 {
            break;
        }
        let gnorm = dot(&descent, &descent).sqrt();
        if gnorm == 0.0 {
            break;
        }
        let step = opts.step_constant * cons.l2_radius / (i as f64).sqrt() / gnorm;
        axpy(step, &descent, &mut w);
        let (_, ok) = projector.project(&mut w, center, cons.l2_radius, cons.l1_radius, opts.projection);
        if !ok {
            projection_warnings += 1;
        }

        if i >= avg_start {
            avg_count += 1;
            let inv = 1.0 / avg_count as f64;
            for (a, x) in avg.iter_mut().zip(&w) {
                *a += (x - *a) * inv;
            }
            if checkpoints.binary_search(&i).is_ok() {
                loss_trace.push(design.loss_and_descent(&avg, tau, None));
            }
        }
    }

    let (iterate, final_loss, converged) = if best_loss == 0.0 || avg_count == 0 {
        (best, best_loss, true)
    } else {
        let avg_loss = design.loss_and_descent(&avg, tau, None);
        let converged = avg_loss <= best_loss + opts.gap_tolerance;
        if avg_loss <= best_loss {
            (avg, avg_loss, converged)
        } else {
            (best, best_loss, converged)
        }
    };
    Ok(SolverReport {
        iterate: WeightVector::from_vec_unchecked(iterate),
        iterations,
        final_loss,
        loss_trace,
        converged,
        projection_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Label;

    fn ex(x: &[f64], y: Label) -> LabeledExample {
        LabeledExample {
            x: WeightVector::new(x.to_vec()).unwrap(),
            y,
        }
    }

    #[test]
    fn empirical_hinge_cases() {
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let good = vec![ex(&[2.0, 0.0], Label::Positive), ex(&[-3.0, 1.0], Label::Negative)];
        assert_eq!(empirical_hinge(&good, &w, 1.0).unwrap(), 0.0);
        let boundary = vec![ex(&[0.0, 5.0], Label::Positive)];
        assert_eq!(empirical_hinge(&boundary, &w, 0.5).unwrap(), 1.0);
        assert!(empirical_hinge(&[], &w, 1.0).is_err());
        assert!(empirical_hinge(&good, &w, 0.0).is_err());
    }

    #[test]
    fn empirical_hinge_is_mean_of_per_example_losses() {
        let w = WeightVector::new(vec![0.3, -0.7, 0.2]).unwrap();
        let sample = vec![
            ex(&[0.1, 0.2, 0.3], Label::Positive),
            ex(&[-1.0, 0.5, 2.0], Label::Negative),
            ex(&[0.4, -0.4, 0.0], Label::Positive),
        ];
        let tau = 0.37;
        let mean = sample
            .iter()
            .map(|e| crate::vector::hinge_loss(&w, &e.x, e.y, tau))
            .sum::<f64>()
            / 3.0;
        assert!((empirical_hinge(&sample, &w, tau).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_center_is_returned() {
        let center = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let cons = ConstraintSet::new(center.clone(), 0.1, 0.2).unwrap();
        let sample = vec![ex(&[2.0, 0.3], Label::Positive), ex(&[-2.0, 0.1], Label::Negative)];
        let r = minimize_hinge(&sample, &cons, 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(r.final_loss, 0.0);
        assert_eq!(r.iterate, center);
        assert!(r.converged);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cons = ConstraintSet::new(WeightVector::zeros(2), 1.0, 1.5).unwrap();
        assert!(minimize_hinge(&[], &cons, 1.0, &SolverOptions::default()).is_err());
        let s = vec![ex(&[1.0, 0.0], Label::Positive)];
        assert!(minimize_hinge(&s, &cons, 0.0, &SolverOptions::default()).is_err());
        assert!(ConstraintSet::new(WeightVector::zeros(2), 1.0, 0.5).is_err());
        assert!(ConstraintSet::new(WeightVector::zeros(2), 0.0, 0.5).is_err());
    }

    #[test]
    fn iterate_is_feasible_and_improves_on_center() {
        let center = WeightVector::new(vec![0.6, 0.8, 0.0]).unwrap();
        let cons = ConstraintSet::new(center.clone(), 0.2, 0.3).unwrap();
        let sample = vec![
            ex(&[1.0, -1.0, 0.5], Label::Positive),
            ex(&[-0.2, 0.4, 1.0], Label::Negative),
            ex(&[0.3, 0.1, -0.8], Label::Positive),
            ex(&[0.0, 1.0, 0.0], Label::Negative),
        ];
        let opts = SolverOptions {
            trace_points: 10,
            ..SolverOptions::default()
        };
        let r = minimize_hinge(&sample, &cons, 0.5, &opts).unwrap();
        assert!(cons.contains(&r.iterate, 1e-6));
        let at_center = empirical_hinge(&sample, &center, 0.5).unwrap();
        assert!(r.final_loss <= at_center);
        assert_eq!(r.loss_trace.len(), 10);
        assert!((empirical_hinge(&sample, &r.iterate, 0.5).unwrap() - r.final_loss).abs() < 1e-12);
    }
}
