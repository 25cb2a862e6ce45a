//! Dense vector kernels: norms, hard thresholding, angles, the scaled hinge
//! loss, and Euclidean projections onto l2 balls, l1 balls and their
//! intersection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::world::Label;

/// A dense real vector of fixed dimension with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(param("vector dimension must be at least 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("vector entries must be finite"));
        }
        Ok(Self(values))
    }

    /// Wraps values already known to be finite.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// The `i`-th standard basis vector of dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &WeightVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_l2(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// Number of nonzero entries.
    pub fn norm_l0(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sub(&self, other: &WeightVector) -> WeightVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &WeightVector) -> WeightVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> WeightVector {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    pub fn distance_l2(&self, other: &WeightVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance_l1(&self, other: &WeightVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        WeightVector::new(values)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(v: WeightVector) -> Self {
        v.0
    }
}

/// Inner product with four independent accumulators so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Keeps the `s` largest-magnitude entries of `v` and zeroes the rest.
/// Among equal magnitudes the lower index is kept.
pub fn hard_threshold(v: &WeightVector, s: usize) -> Result<WeightVector> {
    let d = v.dim();
    if s < 1 || s > d {
        return Err(param(format!("sparsity level {s} outside 1..={d}")));
    }
    if s == d {
        return Ok(v.clone());
    }
    let vals = v.as_slice();
    let mut order: Vec<usize> = (0..d).collect();
    order.select_nth_unstable_by(s - 1, |&i, &j| magnitude_order(vals, i, j));
    let mut out = vec![0.0; d];
    for &i in &order[..s] {
        out[i] = vals[i];
    }
    Ok(WeightVector(out))
}

/// Total order: larger magnitude first, then lower index first.
fn magnitude_order(vals: &[f64], i: usize, j: usize) -> Ordering {
    vals[j]
        .abs()
        .partial_cmp(&vals[i].abs())
        .unwrap_or(Ordering::Equal)
        .then(i.cmp(&j))
}

/// Scales `v` to unit l2 norm.
pub fn normalize(v: &WeightVector) -> Result<WeightVector> {
    let n = v.norm_l2();
    if n == 0.0 {
        return Err(Error::Degenerate("cannot normalize the zero vector"));
    }
    Ok(v.scale(1.0 / n))
}

/// Angle between two nonzero vectors, in `[0, pi]`.
///
/// Computed as `2 atan2(|a - b|, |a + b|)` on the normalized vectors, which
/// equals `arccos(a . b)` but stays accurate near 0 and pi.
pub fn angle(w: &WeightVector, v: &WeightVector) -> Result<f64> {
    if w.dim() != v.dim() {
        return Err(param("angle between vectors of different dimension"));
    }
    let nw = w.norm_l2();
    let nv = v.norm_l2();
    if nw == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("angle with the zero vector"));
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in w.as_slice().iter().zip(v.as_slice()) {
        let (a, b) = (a / nw, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, std::f64::consts::PI))
}

/// The scaled hinge loss `max(0, 1 - y (w . x) / tau)`.
pub fn hinge_loss(w: &WeightVector, x: &WeightVector, y: Label, tau: f64) -> f64 {
    hinge_from_margin(y.sign() * w.dot(x), tau)
}

#[inline]
pub(crate) fn hinge_from_margin(signed_margin: f64, tau: f64) -> f64 {
    (1.0 - signed_margin / tau).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
}

/// A closed norm ball `{z : ||z - center|| <= radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: WeightVector,
    pub radius: f64,
    pub kind: NormKind,
}

impl Ball {
    pub fn new(center: WeightVector, radius: f64, kind: NormKind) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(param(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            kind,
        })
    }

    pub fn l2(center: WeightVector, radius: f64) -> Result<Self> {
        Self::new(center, radius, NormKind::L2)
    }

    pub fn l1(center: WeightVector, radius: f64) -> Result<Self> {
        Self::new(center, radius, NormKind::L1)
    }

    /// Distance from `v` to the center in this ball's norm.
    pub fn distance(&self, v: &WeightVector) -> f64 {
        match self.kind {
            NormKind::L1 => v.distance_l1(&self.center),
            NormKind::L2 => v.distance_l2(&self.center),
        }
    }

    /// Amount by which `v` violates the constraint; zero when inside.
    pub fn slack(&self, v: &WeightVector) -> f64 {
        (self.distance(v) - self.radius).max(0.0)
    }

    pub fn project(&self, v: &WeightVector) -> WeightVector {
        let mut out = v.as_slice().to_vec();
        match self.kind {
            NormKind::L1 => project_l1_slice(&mut out, self.center.as_slice(), self.radius),
            NormKind::L2 => project_l2_slice(&mut out, self.center.as_slice(), self.radius),
        }
        WeightVector(out)
    }
}

/// Euclidean projection onto an l2 ball.
pub fn project_l2(v: &WeightVector, ball: &Ball) -> Result<WeightVector> {
    check_ball(v, ball, NormKind::L2)?;
    Ok(ball.project(v))
}

/// Euclidean projection onto an l1 ball (exact sort-based threshold).
pub fn project_l1(v: &WeightVector, ball: &Ball) -> Result<WeightVector> {
    check_ball(v, ball, NormKind::L1)?;
    Ok(ball.project(v))
}

fn check_ball(v: &WeightVector, ball: &Ball, kind: NormKind) -> Result<()> {
    if ball.kind != kind {
        return Err(param(format!("expected an {kind:?} ball, got {:?}", ball.kind)));
    }
    if ball.center.dim() != v.dim() {
        return Err(param("ball center and vector have different dimensions"));
    }
    Ok(())
}

pub(crate) fn project_l2_slice(v: &mut [f64], center: &[f64], radius: f64) {
    let dist = v
        .iter()
        .zip(center)
        .map(|(a, c)| (a - c) * (a - c))
        .sum::<f64>()
        .sqrt();
    if dist <= radius {
        return;
    }
    let s = radius / dist;
    for (a, c) in v.iter_mut().zip(center) {
        *a = c + s * (*a - c);
    }
}

pub(crate) fn project_l1_slice(v: &mut [f64], center: &[f64], radius: f64) {
    let dist: f64 = v.iter().zip(center).map(|(a, c)| (a - c).abs()).sum();
    if dist <= radius {
        return;
    }
    if radius == 0.0 {
        v.copy_from_slice(center);
        return;
    }
    let theta = l1_threshold(v, center, radius);
    for (a, c) in v.iter_mut().zip(center) {
        let diff = *a - c;
        *a = c + diff.signum() * (diff.abs() - theta).max(0.0);
    }
}

/// Soft-threshold level that maps `|v - c|` onto the l1 sphere of `radius`.
fn l1_threshold(v: &[f64], center: &[f64], radius: f64) -> f64 {
    let mut mags: Vec<f64> = v.iter().zip(center).map(|(a, c)| (a - c).abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// Controls for Dykstra's alternating projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DykstraOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

/// Result of projecting onto an intersection of balls.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: WeightVector,
    pub iterations: usize,
    /// False when the iteration cap was hit; `point` is then the last iterate.
    pub converged: bool,
}

/// Euclidean projection onto the intersection of an l2 ball and an l1 ball
/// sharing a center, by Dykstra's algorithm.
pub fn project_intersection(
    v: &WeightVector,
    l2: &Ball,
    l1: &Ball,
    opts: DykstraOptions,
) -> Result<Projection> {
    check_ball(v, l2, NormKind::L2)?;
    check_ball(v, l1, NormKind::L1)?;
    if l2.center != l1.center {
        return Err(param("intersection balls must share a center"));
    }
    let mut buf = v.as_slice().to_vec();
    let mut ws = DykstraWorkspace::new(v.dim());
    let (iterations, converged) = ws.project(&mut buf, l2.center.as_slice(), l2.radius, l1.radius, opts);
    Ok(Projection {
        point: WeightVector(buf),
        iterations,
        converged,
    })
}

/// Scratch buffers reused across repeated intersection projections.
pub(crate) struct DykstraWorkspace {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl DykstraWorkspace {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            x: vec![0.0; d],
            y: vec![0.0; d],
            z: vec![0.0; d],
            p: vec![0.0; d],
            q: vec![0.0; d],
        }
    }

    /// Projects `v` in place. Returns (iterations, converged).
    pub(crate) fn project(
        &mut self,
        v: &mut [f64],
        center: &[f64],
        r2: f64,
        r1: f64,
        opts: DykstraOptions,
    ) -> (usize, bool) {
        // An l2 projection that already lies in the l1 ball (or vice versa) is
        // the projection onto the intersection.
        self.y.copy_from_slice(v);
        project_l2_slice(&mut self.y, center, r2);
        if l1_dist(&self.y, center) <= r1 {
            v.copy_from_slice(&self.y);
            return (0, true);
        }
        self.y.copy_from_slice(v);
        project_l1_slice(&mut self.y, center, r1);
        if l2_dist(&self.y, center) <= r2 {
            v.copy_from_slice(&self.y);
            return (0, true);
        }

        let n = v.len();
        self.x.copy_from_slice(v);
        self.p.fill(0.0);
        self.q.fill(0.0);
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            for i in 0..n {
                self.y[i] = self.x[i] + self.p[i];
            }
            project_l2_slice(&mut self.y, center, r2);
            for i in 0..n {
                self.p[i] += self.x[i] - self.y[i];
                self.z[i] = self.y[i] + self.q[i];
            }
            project_l1_slice(&mut self.z, center, r1);
            let mut moved = 0.0;
            for i in 0..n {
                self.q[i] += self.y[i] - self.z[i];
                let step = self.z[i] - self.x[i];
                moved += step * step;
            }
            std::mem::swap(&mut self.x, &mut self.z);
            if moved.sqrt() < opts.tolerance {
                converged = true;
                break;
            }
        }
        // The iterate lies in the l1 ball; shrinking it radially toward the
        // shared center keeps it there and restores l2 feasibility.
        v.copy_from_slice(&self.x);
        project_l2_slice(v, center, r2);
        (iterations, converged)
    }
}

fn l1_dist(v: &[f64], c: &[f64]) -> f64 {
    v.iter().zip(c).map(|(a, b)| (a - b).abs()).sum()
}

fn l2_dist(v: &[f64], c: &[f64]) -> f64 {
    v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
