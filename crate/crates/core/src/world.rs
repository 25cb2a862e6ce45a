//! Synthetic data: isotropic log-concave marginals, hidden sparse targets and
//! label oracles for the realizable, adversarial and bounded noise models.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

use crate::error::{param, Result};
use crate::rng::{mix64, RngState};
use crate::vector::{dot, WeightVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// Sign of a margin, with `sign(0) = +1`.
    pub fn from_margin(m: f64) -> Self {
        if m >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub x: WeightVector,
    pub y: Label,
}

/// The hidden `t`-sparse unit normal of a synthetic world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTarget {
    pub u: WeightVector,
    pub support: Vec<usize>,
    pub t: usize,
}

impl SparseTarget {
    /// Builds a target from an explicit vector, normalizing it.
    pub fn from_vector(v: WeightVector, t: usize) -> Result<Self> {
        let u = crate::vector::normalize(&v)?;
        let support = u.support();
        if support.len() > t {
            return Err(param(format!("target has {} nonzeros, more than t = {t}", support.len())));
        }
        Ok(Self { u, support, t })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }
}

/// Draws a uniformly random size-`t` support with i.i.d. Gaussian values,
/// normalized to unit length.
pub fn sample_target(d: usize, t: usize, rng: &mut RngState) -> Result<SparseTarget> {
    if d == 0 || t < 1 || t > d {
        return Err(param(format!("target sparsity t = {t} must lie in 1..={d}")));
    }
    let mut support = index::sample(rng, d, t).into_vec();
    support.sort_unstable();
    let mut values = vec![0.0; d];
    loop {
        let mut norm = 0.0;
        for &i in &support {
            let g: f64 = StandardNormal.sample(rng);
            values[i] = g;
            norm += g * g;
        }
        // A zero draw is a probability-zero event; redraw rather than emit a
        // vector with fewer than t nonzeros.
        if norm > 0.0 && support.iter().all(|&i| values[i] != 0.0) {
            let n = norm.sqrt();
            for &i in &support {
                values[i] /= n;
            }
            break;
        }
    }
    Ok(SparseTarget {
        u: WeightVector::from_vec_unchecked(values),
        support,
        t,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    #[default]
    StandardGaussian,
    /// Uniform on the ball of radius `sqrt(d + 2)`, which has identity covariance.
    IsotropicUniformBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Marginal {
    pub kind: MarginalKind,
    pub dim: usize,
}

impl Marginal {
    pub fn new(kind: MarginalKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param("dimension must be at least 1"));
        }
        Ok(Self { kind, dim })
    }

    pub fn gaussian(dim: usize) -> Self {
        Self {
            kind: MarginalKind::StandardGaussian,
            dim,
        }
    }

    fn ball_radius(&self) -> f64 {
        ((self.dim + 2) as f64).sqrt()
    }

    pub fn sample_x(&self, rng: &mut RngState) -> WeightVector {
        let mut x = vec![0.0; self.dim];
        self.sample_into(&mut x, rng);
        WeightVector::from_vec_unchecked(x)
    }

    pub(crate) fn sample_into(&self, x: &mut [f64], rng: &mut RngState) {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(rng);
        }
        if self.kind == MarginalKind::IsotropicUniformBall {
            let norm = dot(x, x).sqrt();
            let radius = self.ball_radius() * rng.uniform().powf(1.0 / self.dim as f64);
            let s = if norm > 0.0 { radius / norm } else { 0.0 };
            x.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Probability that `|v . x| <= b` for a unit vector `v`.
    ///
    /// Both marginals are rotationally invariant so the result does not
    /// depend on `v`. The ball case uses `(v . x)^2 / R^2 ~ Beta(1/2, (d+1)/2)`.
    pub fn band_mass(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        if b.is_infinite() {
            return 1.0;
        }
        match self.kind {
            MarginalKind::StandardGaussian => libm::erf(b / std::f64::consts::SQRT_2),
            MarginalKind::IsotropicUniformBall => {
                let r = self.ball_radius();
                let a = (b / r).powi(2);
                if a >= 1.0 {
                    1.0
                } else {
                    beta_reg(0.5, (self.dim as f64 + 1.0) / 2.0, a)
                }
            }
        }
    }

    /// Smallest `gamma` with `P(|v . x| <= gamma) = mass`.
    pub fn band_quantile(&self, mass: f64) -> f64 {
        if mass <= 0.0 {
            return 0.0;
        }
        match self.kind {
            MarginalKind::StandardGaussian => {
                if mass >= 1.0 {
                    return f64::INFINITY;
                }
                Normal::standard().inverse_cdf((1.0 + mass) / 2.0)
            }
            MarginalKind::IsotropicUniformBall => {
                let (mut lo, mut hi) = (0.0, self.ball_radius());
                if mass >= 1.0 {
                    return hi;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.band_mass(mid) < mass {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }
}

/// Band mass with its Monte Carlo standard error (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandMass {
    pub mass: f64,
    pub stderr: f64,
}

/// Mass of the band `{x : |v . x| <= b}` under the marginal.
pub fn band_mass(marginal: &Marginal, v: &WeightVector, b: f64) -> Result<BandMass> {
    if v.dim() != marginal.dim {
        return Err(param("band normal dimension does not match the marginal"));
    }
    if (v.norm_l2() - 1.0).abs() > 1e-9 {
        return Err(param("band normal must be a unit vector"));
    }
    if !(b > 0.0) {
        return Err(param(format!("band width must be positive, got {b}")));
    }
    Ok(BandMass {
        mass: marginal.band_mass(b),
        stderr: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialStrategy {
    /// Flip every label with `|u . x| <= gamma`, where the band has mass `nu`.
    BoundaryBand,
    /// Flip labels whose hashed coordinates fall below `nu`.
    HashedRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundedProfile {
    Constant,
    /// Flip probability `eta * exp(-|u . x|)`.
    MarginDecay,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Realizable,
    Adversarial {
        nu: f64,
        strategy: AdversarialStrategy,
    },
    Bounded {
        eta: f64,
        profile: BoundedProfile,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Realizable => Ok(()),
            NoiseModel::Adversarial { nu, .. } if nu > 0.0 && nu < 1.0 => Ok(()),
            NoiseModel::Adversarial { nu, .. } => Err(param(format!("adversarial rate nu = {nu} outside (0, 1)"))),
            NoiseModel::Bounded { eta, .. } if (0.0..0.5).contains(&eta) => Ok(()),
            NoiseModel::Bounded { eta, .. } => Err(param(format!("bounded rate eta = {eta} outside [0, 1/2)"))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::Realizable => "realizable",
            NoiseModel::Adversarial {
                strategy: AdversarialStrategy::BoundaryBand,
                ..
            } => "adversarial_boundary_band",
            NoiseModel::Adversarial {
                strategy: AdversarialStrategy::HashedRandom,
                ..
            } => "adversarial_hashed_random",
            NoiseModel::Bounded {
                profile: BoundedProfile::Constant,
                ..
            } => "bounded_constant",
            NoiseModel::Bounded {
                profile: BoundedProfile::MarginDecay,
                ..
            } => "bounded_margin_decay",
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            NoiseModel::Realizable => 0.0,
            NoiseModel::Adversarial { nu, .. } => nu,
            NoiseModel::Bounded { eta, .. } => eta,
        }
    }
}

/// A complete synthetic distribution: marginal, target and label oracle.
#[derive(Clone, Debug)]
pub struct World {
    pub marginal: Marginal,
    pub target: SparseTarget,
    pub noise: NoiseModel,
    boundary_gamma: f64,
    hash_salt: u64,
}

impl World {
    pub fn new(marginal: Marginal, target: SparseTarget, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        if target.dim() != marginal.dim {
            return Err(param("target and marginal dimensions differ"));
        }
        let boundary_gamma = match noise {
            NoiseModel::Adversarial { nu, .. } => marginal.band_quantile(nu),
            _ => 0.0,
        };
        let hash_salt = target
            .u
            .as_slice()
            .iter()
            .fold(0x243f_6a88_85a3_08d3, |h, v| mix64(h ^ v.to_bits()));
        Ok(Self {
            marginal,
            target,
            noise,
            boundary_gamma,
            hash_salt,
        })
    }

    /// Draws a fresh target and assembles the world around it.
    pub fn generate(
        kind: MarginalKind,
        d: usize,
        t: usize,
        noise: NoiseModel,
        rng: &mut RngState,
    ) -> Result<Self> {
        let marginal = Marginal::new(kind, d)?;
        let target = sample_target(d, t, rng)?;
        Self::new(marginal, target, noise)
    }

    pub fn dim(&self) -> usize {
        self.marginal.dim
    }

    /// Half-width of the adversarial flip band around the target boundary.
    pub fn boundary_gamma(&self) -> f64 {
        self.boundary_gamma
    }

    pub fn sample_x(&self, rng: &mut RngState) -> WeightVector {
        self.marginal.sample_x(rng)
    }

    /// Queries the label oracle at `x`.
    pub fn label(&self, x: &WeightVector, rng: &mut RngState) -> Label {
        self.label_slice(x.as_slice(), rng)
    }

    pub(crate) fn label_slice(&self, x: &[f64], rng: &mut RngState) -> Label {
        let margin = dot(self.target.u.as_slice(), x);
        let clean = Label::from_margin(margin);
        if self.flips(x, margin, rng) {
            clean.flip()
        } else {
            clean
        }
    }

    /// Probability that the oracle disagrees with the target at a point with
    /// the given target margin. Adversarial models are deterministic, so this
    /// is 0 or 1 for them (`x` is needed only by the hashed strategy).
    pub fn flip_probability(&self, x: &[f64], margin: f64) -> f64 {
        match self.noise {
            NoiseModel::Realizable => 0.0,
            NoiseModel::Adversarial {
                strategy: AdversarialStrategy::BoundaryBand,
                ..
            } => f64::from(margin.abs() <= self.boundary_gamma),
            NoiseModel::Adversarial {
                nu,
                strategy: AdversarialStrategy::HashedRandom,
            } => f64::from(self.hash_unit(x) < nu),
            NoiseModel::Bounded {
                eta,
                profile: BoundedProfile::Constant,
            } => eta,
            NoiseModel::Bounded {
                eta,
                profile: BoundedProfile::MarginDecay,
            } => eta * (-margin.abs()).exp(),
        }
    }

    fn flips(&self, x: &[f64], margin: f64, rng: &mut RngState) -> bool {
        match self.noise {
            NoiseModel::Realizable => false,
            NoiseModel::Adversarial { .. } => self.flip_probability(x, margin) > 0.5,
            NoiseModel::Bounded { .. } => rng.uniform() < self.flip_probability(x, margin),
        }
    }

    /// Deterministic hash of the bit pattern of `x`, mapped to `[0, 1)`.
    fn hash_unit(&self, x: &[f64]) -> f64 {
        let h = x.iter().fold(self.hash_salt, |h, v| mix64(h ^ v.to_bits()));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_world(d: usize, t: usize, noise: NoiseModel, seed: u64) -> World {
        let mut rng = RngState::new(seed, 0);
        World::generate(MarginalKind::StandardGaussian, d, t, noise, &mut rng).unwrap()
    }

    #[test]
    fn target_full_support_is_dense_unit() {
        let mut rng = RngState::new(1, 0);
        let target = sample_target(5, 5, &mut rng).unwrap();
        assert_eq!(target.u.norm_l0(), 5);
        assert!((target.u.norm_l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_one_dimensional_is_plus_minus_one() {
        for seed in 0..10 {
            let mut rng = RngState::new(seed, 0);
            let target = sample_target(1, 1, &mut rng).unwrap();
            assert_eq!(target.u.as_slice()[0].abs(), 1.0);
        }
    }

    #[test]
    fn target_invariants_hold() {
        for seed in 0..50 {
            let mut rng = RngState::new(seed, 9);
            let target = sample_target(40, 6, &mut rng).unwrap();
            assert!((target.u.norm_l2() - 1.0).abs() < 1e-12);
            assert_eq!(target.u.norm_l0(), 6);
            assert_eq!(target.u.support(), target.support);
            // Cauchy-Schwarz: a unit t-sparse vector has l1 norm at most sqrt(t).
            assert!(target.u.norm_l1() <= (6f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn target_rejects_t_above_d() {
        let mut rng = RngState::new(0, 0);
        assert!(sample_target(3, 4, &mut rng).is_err());
        assert!(sample_target(3, 0, &mut rng).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let m = Marginal::gaussian(5);
        let mut rng = RngState::new(11, 0);
        let n = 100_000;
        let mut sum = [0.0; 5];
        let mut sq = [0.0; 5];
        for _ in 0..n {
            let x = m.sample_x(&mut rng);
            assert_eq!(x.dim(), 5);
            for (i, v) in x.as_slice().iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        for i in 0..5 {
            let mean = sum[i] / n as f64;
            let var = sq[i] / n as f64 - mean * mean;
            assert!(mean.abs() < 0.02, "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn uniform_ball_covariance_is_identity() {
        let d = 4;
        let m = Marginal::new(MarginalKind::IsotropicUniformBall, d).unwrap();
        let mut rng = RngState::new(12, 0);
        let n = 100_000;
        let mut cov = vec![0.0; d * d];
        for _ in 0..n {
            let x = m.sample_x(&mut rng);
            assert!(x.norm_l2() <= ((d + 2) as f64).sqrt() + 1e-12);
            let x = x.as_slice();
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += x[i] * x[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let c = cov[i * d + j] / n as f64;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((c - expected).abs() < 0.05, "cov[{i}][{j}] = {c}");
            }
        }
    }

    #[test]
    fn realizable_labels_agree_with_target() {
        let world = gaussian_world(10, 3, NoiseModel::Realizable, 2);
        let mut rng = RngState::new(3, 0);
        for _ in 0..10_000 {
            let x = world.sample_x(&mut rng);
            let y = world.label(&x, &mut rng);
            assert!(y.sign() * world.target.u.dot(&x) >= 0.0);
        }
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(Label::from_margin(0.0), Label::Positive);
        assert_eq!(Label::from_margin(-0.0), Label::Positive);
    }

    fn flip_rate(world: &World, n: usize, seed: u64) -> f64 {
        let mut rng = RngState::new(seed, 1);
        let mut flips = 0;
        for _ in 0..n {
            let x = world.sample_x(&mut rng);
            let y = world.label(&x, &mut rng);
            if y != Label::from_margin(world.target.u.dot(&x)) {
                flips += 1;
            }
        }
        flips as f64 / n as f64
    }

    #[test]
    fn bounded_constant_flip_frequency() {
        let noise = NoiseModel::Bounded {
            eta: 0.1,
            profile: BoundedProfile::Constant,
        };
        let world = gaussian_world(8, 2, noise, 4);
        let rate = flip_rate(&world, 100_000, 5);
        assert!((rate - 0.1).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn boundary_band_flip_frequency_matches_quantile() {
        let noise = NoiseModel::Adversarial {
            nu: 0.05,
            strategy: AdversarialStrategy::BoundaryBand,
        };
        let world = gaussian_world(8, 2, noise, 6);
        // Gaussian oracle: gamma = Phi^-1((1 + nu) / 2).
        let gamma = Normal::standard().inverse_cdf(0.525);
        assert!((world.boundary_gamma() - gamma).abs() < 1e-12);
        let rate = flip_rate(&world, 100_000, 7);
        assert!((rate - 0.05).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn hashed_random_is_deterministic_with_mass_nu() {
        let noise = NoiseModel::Adversarial {
            nu: 0.2,
            strategy: AdversarialStrategy::HashedRandom,
        };
        let world = gaussian_world(6, 2, noise, 8);
        let mut rng = RngState::new(9, 0);
        for _ in 0..1000 {
            let x = world.sample_x(&mut rng);
            let a = world.label(&x, &mut rng);
            let b = world.label(&x, &mut rng);
            assert_eq!(a, b);
        }
        let rate = flip_rate(&world, 100_000, 10);
        let sigma = (0.2f64 * 0.8 / 100_000.0).sqrt();
        assert!(rate <= 0.2 + 3.0 * sigma, "rate {rate}");
        assert!((rate - 0.2).abs() < 0.01);
    }

    #[test]
    fn margin_decay_respects_eta_pointwise() {
        let noise = NoiseModel::Bounded {
            eta: 0.3,
            profile: BoundedProfile::MarginDecay,
        };
        let world = gaussian_world(6, 2, noise, 8);
        for m in [-3.0, -0.5, 0.0, 0.1, 2.0] {
            let p = world.flip_probability(&[0.0; 6], m);
            assert!(p <= 0.3 && p >= 0.0);
        }
        assert_eq!(world.flip_probability(&[0.0; 6], 0.0), 0.3);
    }

    #[test]
    fn noise_parameters_validated() {
        let bad = [
            NoiseModel::Bounded {
                eta: 0.5,
                profile: BoundedProfile::Constant,
            },
            NoiseModel::Adversarial {
                nu: 0.0,
                strategy: AdversarialStrategy::HashedRandom,
            },
            NoiseModel::Adversarial {
                nu: 1.0,
                strategy: AdversarialStrategy::BoundaryBand,
            },
        ];
        for n in bad {
            assert!(n.validate().is_err(), "{n:?}");
        }
    }

    #[test]
    fn gaussian_band_mass_closed_form() {
        let m = Marginal::gaussian(3);
        let v = WeightVector::basis(3, 0);
        let bm = band_mass(&m, &v, 1.0).unwrap();
        assert!((bm.mass - 0.682_689_492_137_085_9).abs() < 1e-4);
        assert_eq!(bm.stderr, 0.0);
        assert!(m.band_mass(50.0) > 1.0 - 1e-12);
        assert_eq!(m.band_mass(f64::INFINITY), 1.0);
    }

    #[test]
    fn band_mass_below_nine_b() {
        for kind in [MarginalKind::StandardGaussian, MarginalKind::IsotropicUniformBall] {
            let m = Marginal::new(kind, 7).unwrap();
            for i in 1..200 {
                let b = i as f64 * 0.01;
                assert!(m.band_mass(b) <= 9.0 * b);
            }
        }
    }

    #[test]
    fn uniform_ball_band_mass_matches_monte_carlo() {
        let m = Marginal::new(MarginalKind::IsotropicUniformBall, 3).unwrap();
        let v = WeightVector::basis(3, 1);
        let mut rng = RngState::new(13, 0);
        let n = 100_000;
        let b = 0.7;
        let hits = (0..n)
            .filter(|_| m.sample_x(&mut rng).dot(&v).abs() <= b)
            .count();
        let p = hits as f64 / n as f64;
        let exact = m.band_mass(b);
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * sigma, "{p} vs {exact}");
        // Quantile inverts band mass.
        assert!((m.band_quantile(exact) - b).abs() < 1e-9);
    }

    #[test]
    fn band_mass_rejects_non_unit_normal() {
        let m = Marginal::gaussian(2);
        let v = WeightVector::new(vec![2.0, 0.0]).unwrap();
        assert!(band_mass(&m, &v, 1.0).is_err());
    }
}
