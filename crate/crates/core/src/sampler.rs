//! Rejection sampling from the margin band `{x : |w . x| <= b}` and the
//! accounting of unlabeled draws versus label queries.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::RngState;
use crate::vector::{dot, WeightVector};
use crate::world::{LabeledExample, Marginal, World};

/// Floor on the band mass used to size the starvation cap.
const MIN_MASS_FOR_CAP: f64 = 1e-6;
const ATTEMPTS_PER_POINT: f64 = 1e4;

/// Sampling region for one epoch: either all of space or a slab around a
/// unit normal.
#[derive(Clone, Debug, PartialEq)]
pub enum Band {
    FullSpace,
    Slab { normal: WeightVector, width: f64 },
}

impl Band {
    pub fn slab(normal: WeightVector, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(param(format!("band width must be positive and finite, got {width}")));
        }
        if (normal.norm_l2() - 1.0).abs() > 1e-12 {
            return Err(param("band normal must be a unit vector"));
        }
        Ok(Band::Slab { normal, width })
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self, Band::FullSpace)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Band::FullSpace => true,
            Band::Slab { normal, width } => dot(normal.as_slice(), x).abs() <= *width,
        }
    }

    fn width(&self) -> f64 {
        match self {
            Band::FullSpace => f64::INFINITY,
            Band::Slab { width, .. } => *width,
        }
    }
}

/// Probability that a draw from `marginal` lands in `band`.
pub fn expected_acceptance(band: &Band, marginal: &Marginal) -> f64 {
    match band {
        Band::FullSpace => 1.0,
        Band::Slab { width, .. } => marginal.band_mass(*width),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochCounts {
    pub unlabeled: u64,
    pub rejected: u64,
    pub queries: u64,
}

/// Per-epoch tallies of unlabeled draws, rejections and label queries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    epochs: Vec<EpochCounts>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn epochs(&self) -> &[EpochCounts] {
        &self.epochs
    }

    pub fn epoch(&self, k: usize) -> EpochCounts {
        self.epochs.get(k).copied().unwrap_or_default()
    }

    fn entry(&mut self, k: usize) -> &mut EpochCounts {
        if self.epochs.len() <= k {
            self.epochs.resize(k + 1, EpochCounts::default());
        }
        &mut self.epochs[k]
    }

    pub fn total(&self) -> EpochCounts {
        self.epochs.iter().fold(EpochCounts::default(), |acc, e| EpochCounts {
            unlabeled: acc.unlabeled + e.unlabeled,
            rejected: acc.rejected + e.rejected,
            queries: acc.queries + e.queries,
        })
    }

    pub fn queries_per_epoch(&self) -> Vec<u64> {
        self.epochs.iter().map(|e| e.queries).collect()
    }
}

/// Draws exactly `n` labeled examples from the world restricted to `band`.
///
/// Points outside the band are discarded before the oracle is consulted, so
/// only accepted points cost a label query.
pub fn draw_from_band(
    band: &Band,
    n: usize,
    world: &World,
    ledger: &mut QueryLedger,
    epoch: usize,
    rng: &mut RngState,
) -> Result<Vec<LabeledExample>> {
    draw_with_cap(band, n, world, ledger, epoch, rng, ATTEMPTS_PER_POINT)
}

fn draw_with_cap(
    band: &Band,
    n: usize,
    world: &World,
    ledger: &mut QueryLedger,
    epoch: usize,
    rng: &mut RngState,
    attempts_per_point: f64,
) -> Result<Vec<LabeledExample>> {
    if n == 0 {
        return Err(param("sample size must be at least 1"));
    }
    if let Band::Slab { normal, .. } = band {
        if normal.dim() != world.dim() {
            return Err(param("band normal dimension does not match the world"));
        }
    }
    let mass = expected_acceptance(band, &world.marginal).max(MIN_MASS_FOR_CAP);
    let cap = (attempts_per_point * n as f64 / mass).ceil() as u64;

    let mut out = Vec::with_capacity(n);
    let mut x = vec![0.0; world.dim()];
    let mut attempts = 0u64;
    while out.len() < n {
        if attempts >= cap {
            let entry = ledger.entry(epoch);
            entry.unlabeled += attempts;
            entry.rejected += attempts - out.len() as u64;
            entry.queries += out.len() as u64;
            return Err(Error::SamplingStarvation {
                width: band.width(),
                attempts,
                accepted: out.len(),
                requested: n,
            });
        }
        attempts += 1;
        world.marginal.sample_into(&mut x, rng);
        if !band.contains(&x) {
            continue;
        }
        let y = world.label_slice(&x, rng);
        out.push(LabeledExample {
            x: WeightVector::from_vec_unchecked(x.clone()),
            y,
        });
    }
    let entry = ledger.entry(epoch);
    entry.unlabeled += attempts;
    entry.rejected += attempts - n as u64;
    entry.queries += n as u64;
    Ok(out)
}
