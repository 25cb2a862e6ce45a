//! Randomized invariant suites over the vector kernels, the world and the
//! learner schedule. Each failing case is kept as a JSON dump of its inputs.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::learner::{AlgorithmConstants, EpochSchedule};
use crate::rng::RngState;
use crate::vector::{
    angle, hard_threshold, hinge_loss, normalize, project_intersection, project_l1, project_l2, Ball, DykstraOptions,
    WeightVector,
};
use crate::world::{sample_target, Label};

/// Failing inputs kept per property; the failure count is always exact.
const MAX_DUMPS: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub dumps: Vec<Value>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Check = fn(&mut RngState) -> std::result::Result<(), Value>;

const SUITE: [(&str, Check); 10] = [
    ("hard_threshold_optimal", ht_optimal),
    ("normalization_within_twice_distance", normalization_bound),
    ("angle_within_pi_distance", angle_distance_bound),
    ("angle_scale_invariant", angle_scale_invariant),
    ("projection_feasible", projection_feasible),
    ("projection_idempotent", projection_idempotent),
    ("hinge_dominates_zero_one", hinge_dominates),
    ("target_feasible_at_epoch_zero", target_feasible),
    ("schedule_halves", schedule_halves),
    ("threshold_output_sparse", threshold_sparse),
];

pub fn property_names() -> Vec<&'static str> {
    SUITE.iter().map(|(n, _)| *n).collect()
}

/// Runs `cases` random cases of every property (or only those whose name
/// contains `filter`). Property `i` draws from its own stream of `seed`.
pub fn run_properties(cases: usize, seed: u64, filter: Option<&str>) -> Vec<PropertyReport> {
    SUITE
        .iter()
        .enumerate()
        .filter(|(_, (name, _))| filter.is_none_or(|f| name.contains(f)))
        .map(|(i, (name, check))| {
            let mut rng = RngState::new(seed, i as u64);
            let mut report = PropertyReport {
                name,
                cases,
                failures: 0,
                dumps: Vec::new(),
            };
            for case in 0..cases {
                if let Err(dump) = check(&mut rng) {
                    report.failures += 1;
                    if report.dumps.len() < MAX_DUMPS {
                        report.dumps.push(json!({ "case": case, "input": dump }));
                    }
                }
            }
            report
        })
        .collect()
}

/// Writes one `<name>.json` file per failing property into `dir`.
pub fn write_dumps(reports: &[PropertyReport], dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for r in reports.iter().filter(|r| !r.passed()) {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", r.name));
        std::fs::write(&path, serde_json::to_string_pretty(r).expect("reports serialize"))?;
        written.push(path);
    }
    Ok(written)
}

fn gaussian(rng: &mut RngState, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

/// Gaussian entries, or small integers so that ties are common.
fn entries(rng: &mut RngState, d: usize) -> Vec<f64> {
    if rng.random_bool(0.3) {
        (0..d).map(|_| rng.random_range(-3i32..=3) as f64).collect()
    } else {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        gaussian(rng, d, scale)
    }
}

fn nonzero(rng: &mut RngState, d: usize) -> WeightVector {
    loop {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let v = gaussian(rng, d, scale);
        if v.iter().any(|x| *x != 0.0) {
            return WeightVector::new(v).expect("finite");
        }
    }
}

fn ht_optimal(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=8usize);
    let s = rng.random_range(1..=d);
    let v = entries(rng, d);
    let ht = hard_threshold(&WeightVector::new(v.clone()).unwrap(), s).map_err(|e| json!({"v": v, "s": s, "error": e.to_string()}))?;
    let residual: f64 = v.iter().zip(ht.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    let best = (0u32..1 << d)
        .filter(|m| m.count_ones() as usize == s)
        .map(|m| (0..d).filter(|i| m & (1 << i) == 0).map(|i| v[i] * v[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let kept_original = v.iter().zip(ht.as_slice()).all(|(a, b)| *b == 0.0 || a == b);
    if ht.norm_l0() <= s && kept_original && residual <= best * (1.0 + 1e-12) + 1e-300 {
        Ok(())
    } else {
        Err(json!({"v": v, "s": s, "ht": ht.as_slice(), "residual": residual, "best": best}))
    }
}

fn normalization_bound(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=12usize);
    let w = nonzero(rng, d);
    let v = normalize(&nonzero(rng, d)).unwrap();
    let lhs = normalize(&w).unwrap().distance_l2(&v);
    let rhs = 2.0 * w.distance_l2(&v);
    if lhs <= rhs + 1e-12 {
        Ok(())
    } else {
        Err(json!({"w": w.as_slice(), "v": v.as_slice(), "lhs": lhs, "rhs": rhs}))
    }
}

fn angle_distance_bound(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=12usize);
    let w = normalize(&nonzero(rng, d)).unwrap();
    let v = normalize(&nonzero(rng, d)).unwrap();
    let theta = angle(&w, &v).unwrap();
    let bound = std::f64::consts::PI * w.distance_l2(&v);
    if theta <= bound + 1e-12 {
        Ok(())
    } else {
        Err(json!({"w": w.as_slice(), "v": v.as_slice(), "theta": theta, "bound": bound}))
    }
}

fn angle_scale_invariant(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=12usize);
    let w = nonzero(rng, d);
    let v = nonzero(rng, d);
    let a = 10f64.powf(rng.random_range(-6.0..6.0));
    let b = 10f64.powf(rng.random_range(-6.0..6.0));
    let base = angle(&w, &v).unwrap();
    let scaled = angle(&w.scale(a), &v.scale(b)).unwrap();
    if (base - scaled).abs() <= 1e-12 {
        Ok(())
    } else {
        Err(json!({"w": w.as_slice(), "v": v.as_slice(), "a": a, "b": b, "base": base, "scaled": scaled}))
    }
}

struct ProjectionCase {
    v: WeightVector,
    center: WeightVector,
    r2: f64,
    r1: f64,
}

impl ProjectionCase {
    fn draw(rng: &mut RngState) -> Self {
        let d = rng.random_range(1..=10usize);
        let spread = rng.random_range(0.0..2.0);
        let center = WeightVector::new(gaussian(rng, d, spread)).unwrap();
        let r2 = 10f64.powf(rng.random_range(-3.0..1.0));
        let r1 = r2 * rng.random_range(0.5..(d as f64).sqrt() + 0.5);
        let scale = r2 * 10f64.powf(rng.random_range(-1.0..1.5));
        let offset = gaussian(rng, d, scale);
        Self {
            v: center.add(&WeightVector::new(offset).unwrap()),
            center,
            r2,
            r1,
        }
    }

    fn dump(&self, extra: Value) -> Value {
        json!({"v": self.v.as_slice(), "center": self.center.as_slice(), "r2": self.r2, "r1": self.r1, "result": extra})
    }

    fn balls(&self) -> (Ball, Ball) {
        (Ball::l2(self.center.clone(), self.r2).unwrap(), Ball::l1(self.center.clone(), self.r1).unwrap())
    }

    /// The three projections of `v` under test.
    fn projections(&self, v: &WeightVector) -> [WeightVector; 3] {
        let (l2, l1) = self.balls();
        let both = project_intersection(v, &l2, &l1, DykstraOptions::default()).unwrap();
        [project_l2(v, &l2).unwrap(), project_l1(v, &l1).unwrap(), both.point]
    }
}

fn projection_feasible(rng: &mut RngState) -> std::result::Result<(), Value> {
    let case = ProjectionCase::draw(rng);
    let [p2, p1, pb] = case.projections(&case.v);
    let tol2 = 1e-9 * case.r2.max(1.0);
    let tol1 = 1e-9 * case.r1.max(1.0);
    let c = &case.center;
    let ok = p2.distance_l2(c) <= case.r2 + tol2
        && p1.distance_l1(c) <= case.r1 + tol1
        && pb.distance_l2(c) <= case.r2 + tol2
        && pb.distance_l1(c) <= case.r1 + tol1;
    if ok {
        Ok(())
    } else {
        Err(case.dump(json!({"l2": p2.as_slice(), "l1": p1.as_slice(), "both": pb.as_slice()})))
    }
}

fn projection_idempotent(rng: &mut RngState) -> std::result::Result<(), Value> {
    let case = ProjectionCase::draw(rng);
    let first = case.projections(&case.v);
    for (i, p) in first.iter().enumerate() {
        let again = case.projections(p)[i].clone();
        if again.distance_l2(p) > 1e-9 * case.r2.max(1.0) {
            return Err(case.dump(json!({"which": i, "once": p.as_slice(), "twice": again.as_slice()})));
        }
    }
    Ok(())
}

fn hinge_dominates(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=12usize);
    let w = WeightVector::new(gaussian(rng, d, 1.0)).unwrap();
    let scale = rng.random_range(0.1..3.0);
    let x = WeightVector::new(gaussian(rng, d, scale)).unwrap();
    let y = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
    let tau = 10f64.powf(rng.random_range(-3.0..1.0));
    let loss = hinge_loss(&w, &x, y, tau);
    let margin = y.sign() * w.dot(&x);
    let zero_one = if margin <= 0.0 { 1.0 } else { 0.0 };
    if loss >= zero_one && loss >= 0.0 {
        Ok(())
    } else {
        Err(json!({"w": w.as_slice(), "x": x.as_slice(), "y": y.sign(), "tau": tau, "loss": loss}))
    }
}

fn target_feasible(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=200usize);
    let t = rng.random_range(1..=d);
    let seed = rng.next_u64();
    let target = sample_target(d, t, &mut RngState::new(seed, 0)).unwrap();
    let u = &target.u;
    let ok = (u.norm_l2() - 1.0).abs() <= 1e-12
        && u.norm_l1() <= (t as f64).sqrt() * (1.0 + 1e-12)
        && u.norm_l0() == t
        && target.support == u.support();
    if ok {
        Ok(())
    } else {
        Err(json!({"d": d, "t": t, "seed": seed}))
    }
}

fn schedule_halves(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=5000usize);
    let t = rng.random_range(1..=d.min(50));
    let epsilon = 10f64.powf(rng.random_range(-4.0..-0.5));
    let delta = 10f64.powf(rng.random_range(-4.0..-0.5));
    let constants = AlgorithmConstants {
        c1: rng.random_range(0.01..2.0),
        c2: rng.random_range(0.1..4.0),
        c3: rng.random_range(0.01..1.0),
        ..AlgorithmConstants::default()
    };
    let s = EpochSchedule::build(d, t, epsilon, delta, constants).unwrap();
    let halves = s.epochs.windows(2).all(|p| {
        p[1].band_width / p[0].band_width == 0.5 && p[1].l2_radius / p[0].l2_radius == 0.5 && p[1].tau / p[0].tau == 0.5
    });
    let deltas: f64 = s.epochs.iter().map(|e| e.delta).sum();
    if halves && deltas <= delta {
        Ok(())
    } else {
        Err(json!({"d": d, "t": t, "epsilon": epsilon, "delta": delta, "constants": constants}))
    }
}

fn threshold_sparse(rng: &mut RngState) -> std::result::Result<(), Value> {
    let d = rng.random_range(1..=64usize);
    let s = rng.random_range(1..=d);
    let v = entries(rng, d);
    let ht = hard_threshold(&WeightVector::new(v.clone()).unwrap(), s).unwrap();
    let nonzero_in = v.iter().filter(|x| **x != 0.0).count();
    if ht.norm_l0() == nonzero_in.min(s) {
        Ok(())
    } else {
        Err(json!({"v": v, "s": s, "ht": ht.as_slice()}))
    }
}
