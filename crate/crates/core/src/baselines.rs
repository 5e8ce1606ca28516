//! Baseline distances: sliced and max-sliced Wasserstein on Euclidean clouds,
//! and the Chamfer distance between point sets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, SpaceKind};
use crate::numeric::{pow_cost, root_cost, CompensatedSum};
use crate::ot::{check_exponent, wasserstein_1d, LineMeasure};

/// Unit directions for projecting Euclidean measures onto lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSet {
    directions: Vec<Vec<f64>>,
    seed: u64,
}

impl SliceSet {
    /// Explicit directions; each is normalized and must be nonzero.
    pub fn from_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = directions.first().ok_or(Error::Empty("slice directions"))?.len();
        let directions = directions
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                if v.len() != dim {
                    return Err(Error::RaggedDimensions {
                        row: index,
                        expected: dim,
                        found: v.len(),
                    });
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::NotUnitNorm { index, norm });
                }
                Ok(v.into_iter().map(|x| x / norm).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { directions, seed: 0 })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }
}

/// `count` directions uniform on the unit sphere of `R^d`, as normalized
/// standard Gaussian vectors.
pub fn sample_slices(d: usize, count: usize, seed: u64) -> Result<SliceSet> {
    if d == 0 || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "slices need d >= 1 and count >= 1, got d = {d}, count = {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = Vec::with_capacity(count);
    while directions.len() < count {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            directions.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(SliceSet { directions, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceReduction {
    /// `(mean_theta w_p^p)^(1/p)`, the usual sliced Wasserstein distance.
    Mean,
    /// `max_theta w_p`.
    Max,
}

/// Projection of a Euclidean measure onto a direction.
pub fn project(mu: &DiscreteMeasure, direction: &[f64]) -> LineMeasure {
    let space = mu.space();
    LineMeasure::from_atoms(
        mu.atoms()
            .iter()
            .map(|&(x, w)| {
                let t = space.point(x).iter().zip(direction).map(|(a, b)| a * b).sum();
                (t, w)
            })
            .collect(),
    )
}

/// Per-direction `w_p` between the projections of `mu` and `nu`.
pub fn slice_distances(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    slices: &SliceSet,
) -> Result<Vec<f64>> {
    check_exponent(p)?;
    mu.require_same_space(nu)?;
    let space = mu.space();
    if space.kind() != SpaceKind::EuclideanCloud {
        return Err(Error::UnsupportedSpace {
            required: SpaceKind::EuclideanCloud.name(),
            found: space.kind().name(),
        });
    }
    if space.dim() != Some(slices.dim()) {
        return Err(Error::AnchorDimension {
            expected: space.dim().unwrap_or(0),
            found: slices.dim(),
        });
    }
    slices
        .directions()
        .par_iter()
        .map(|theta| wasserstein_1d(&project(mu, theta), &project(nu, theta), p))
        .collect()
}

/// Reduces per-slice distances with the given reduction.
pub fn reduce_slices(per_slice: &[f64], p: f64, reduction: SliceReduction) -> f64 {
    match reduction {
        SliceReduction::Max => per_slice.iter().copied().fold(0.0, f64::max),
        SliceReduction::Mean => {
            let total: CompensatedSum = per_slice.iter().map(|&w| pow_cost(w, p)).collect();
            root_cost(total.value() / per_slice.len() as f64, p)
        }
    }
}

pub fn sliced_wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    slices: &SliceSet,
    reduction: SliceReduction,
) -> Result<f64> {
    Ok(reduce_slices(&slice_distances(mu, nu, p, slices)?, p, reduction))
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_sum(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.par_iter()
        .map(|p| to.iter().map(|q| squared_euclidean(p, q)).fold(f64::INFINITY, f64::min))
        .collect::<Vec<f64>>()
        .into_iter()
        .collect::<CompensatedSum>()
        .value()
}

/// `sum_{p in P} min_q |p - q|^2 + sum_{q in Q} min_p |p - q|^2`, brute force.
pub fn chamfer(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let dim = p[0].len();
    for (row, point) in p.iter().chain(q).enumerate() {
        if point.len() != dim {
            return Err(Error::RaggedDimensions {
                row,
                expected: dim,
                found: point.len(),
            });
        }
    }
    Ok(nearest_sum(p, q) + nearest_sum(q, p))
}
