//! Classifying samples from three anisotropic Gaussians.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, elapsed_ms, nn_classification_score, DistanceMatrix, ResultRow, ResultTable};
use crate::baselines::{project, sample_slices};
use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::observables::{distance_functions, Anchor};
use crate::ot::{check_exponent, wasserstein_1d};
use crate::owd::{owd_from_transforms, transform, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDatasetConfig {
    pub d: usize,
    pub samples_per_class: usize,
    pub points_per_sample: usize,
    pub seed: u64,
}

/// Labeled samples sharing one pooled point-cloud space. Sample `i` is the
/// uniform measure on points `i * points_per_sample ..`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub space: Arc<FiniteMetricSpace>,
    pub samples: Vec<DiscreteMeasure>,
    pub labels: Vec<usize>,
    pub config: GaussianDatasetConfig,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Coordinates of the support of sample `i`.
    pub fn cloud(&self, i: usize) -> Vec<Vec<f64>> {
        self.samples[i]
            .atoms()
            .iter()
            .map(|&(x, _)| self.space.point(x).to_vec())
            .collect()
    }
}

/// Variances of class `class` (0, 1, 2): identity, then 3 on the first or the
/// last axis.
fn class_variances(class: usize, d: usize) -> Vec<f64> {
    let mut v = vec![1.0; d];
    match class {
        1 => v[0] = 3.0,
        2 => v[d - 1] = 3.0,
        _ => {}
    }
    v
}

/// Three classes of `samples_per_class` samples, each the uniform measure on
/// `points_per_sample` draws from `N(0, Σ_class)`. Labels are `0, 1, 2`,
/// samples ordered by class.
pub fn gaussian_dataset(
    d: usize,
    samples_per_class: usize,
    points_per_sample: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if d == 0 || samples_per_class == 0 || points_per_sample == 0 {
        return Err(Error::InvalidParameter(
            "gaussian dataset needs d, samples_per_class, points_per_sample >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(3 * samples_per_class * points_per_sample);
    let mut labels = Vec::with_capacity(3 * samples_per_class);
    for class in 0..3 {
        let std: Vec<f64> = class_variances(class, d).iter().map(|v| v.sqrt()).collect();
        for _ in 0..samples_per_class {
            labels.push(class);
            for _ in 0..points_per_sample {
                let p: Vec<f64> = std
                    .iter()
                    .map(|s| s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                points.push(p);
            }
        }
    }
    let space = Arc::new(FiniteMetricSpace::point_cloud(&points)?);
    let samples = (0..labels.len())
        .map(|i| {
            let idx: Vec<usize> = (i * points_per_sample..(i + 1) * points_per_sample).collect();
            DiscreteMeasure::uniform(space.clone(), &idx)
        })
        .collect::<Result<_>>()?;
    Ok(LabeledDataset {
        space,
        samples,
        labels,
        config: GaussianDatasetConfig {
            d,
            samples_per_class,
            points_per_sample,
            seed,
        },
    })
}

/// Appends `floor(eta * |P|)` draws from `N(0, sigma^2 I)` to a copy of `P`.
pub fn add_cloud_noise(points: &[Vec<f64>], eta: f64, sigma: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    if !(eta >= 0.0 && eta.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise needs eta >= 0 and sigma > 0, got eta = {eta}, sigma = {sigma}"
        )));
    }
    let d = points[0].len();
    let extra = (eta * points.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = points.to_vec();
    out.extend((0..extra).map(|_| {
        (0..d)
            .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect::<Vec<f64>>()
    }));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub seed: u64,
    pub repeats: usize,
    pub dims: Vec<usize>,
    pub samples_per_class: usize,
    pub points_per_sample: usize,
    /// Numbers of anchors (OW) and of slices (max-sliced).
    pub counts: Vec<usize>,
    /// Independent anchor or slice draws averaged per run.
    pub draws: usize,
    /// Anchors are drawn from `N(0, anchor_variance * I)`.
    pub anchor_variance: f64,
    pub p: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 3,
            dims: vec![2, 5, 10],
            samples_per_class: 10,
            points_per_sample: 250,
            counts: vec![10, 20, 30, 40, 50],
            draws: 10,
            anchor_variance: 5.0,
            p: 1.0,
        }
    }
}

impl GaussianConfig {
    pub fn full() -> Self {
        Self {
            repeats: 10,
            dims: vec![2, 5, 10, 25, 50, 75, 100],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        let bad = |what: &str| Err(Error::InvalidParameter(format!("gaussian config: {what}")));
        if self.repeats == 0 || self.draws == 0 {
            return bad("repeats and draws must be >= 1");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be nonempty and >= 1");
        }
        if self.counts.is_empty() || self.counts.contains(&0) {
            return bad("counts must be nonempty and >= 1");
        }
        if self.samples_per_class < 1 || self.points_per_sample == 0 {
            return bad("samples_per_class and points_per_sample must be >= 1");
        }
        if !(self.anchor_variance > 0.0 && self.anchor_variance.is_finite()) {
            return bad("anchor_variance must be positive");
        }
        Ok(())
    }
}

fn gaussian_anchors(d: usize, count: usize, variance: f64, seed: u64) -> Vec<Anchor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = variance.sqrt();
    (0..count)
        .map(|_| {
            Anchor::Ambient(
                (0..d)
                    .map(|_| s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect(),
            )
        })
        .collect()
}

fn ow_score(data: &LabeledDataset, anchors: &[Anchor], p: f64) -> Result<f64> {
    let set = distance_functions(&data.space, anchors)?;
    let transforms: Vec<_> = data
        .samples
        .par_iter()
        .map(|mu| transform(mu, &set))
        .collect::<Result<_>>()?;
    let dist = DistanceMatrix::from_fn(data.len(), |i, j| {
        Ok(owd_from_transforms(&transforms[i], &transforms[j], p, Mode::Sup)?.value)
    })?;
    nn_classification_score(&dist, &data.labels, 1)
}

fn max_sliced_score(data: &LabeledDataset, count: usize, p: f64, seed: u64) -> Result<f64> {
    let slices = sample_slices(data.config.d, count, seed)?;
    let projections: Vec<Vec<_>> = data
        .samples
        .par_iter()
        .map(|mu| slices.directions().iter().map(|t| project(mu, t)).collect())
        .collect();
    let dist = DistanceMatrix::from_fn(data.len(), |i, j| {
        projections[i]
            .iter()
            .zip(&projections[j])
            .try_fold(0.0f64, |m, (a, b)| Ok(m.max(wasserstein_1d(a, b, p)?)))
    })?;
    nn_classification_score(&dist, &data.labels, 1)
}

const OW_STREAM: u64 = 1;
const SLICE_STREAM: u64 = 2;
const DATA_STREAM: u64 = 3;

/// Rows: `ow_1nn_score` and `max_sliced_1nn_score` per (repetition, d, count),
/// each averaged over `draws` anchor or slice draws.
pub fn run_gaussian(config: &GaussianConfig) -> Result<ResultTable> {
    config.validate()?;
    let reps: Vec<Vec<ResultRow>> = (0..config.repeats)
        .into_par_iter()
        .map(|rep| {
            let seed = config.seed.wrapping_add(rep as u64);
            let mut rows = Vec::new();
            for &d in &config.dims {
                let data = gaussian_dataset(
                    d,
                    config.samples_per_class,
                    config.points_per_sample,
                    derive_seed(seed, &[DATA_STREAM, d as u64]),
                )?;
                for &n in &config.counts {
                    let params = vec![d.to_string(), n.to_string()];
                    let start = Instant::now();
                    let mut total = 0.0;
                    for draw in 0..config.draws {
                        let s = derive_seed(seed, &[OW_STREAM, d as u64, n as u64, draw as u64]);
                        let anchors = gaussian_anchors(d, n, config.anchor_variance, s);
                        total += ow_score(&data, &anchors, config.p)?;
                    }
                    rows.push(ResultRow {
                        seed,
                        params: params.clone(),
                        metric: "ow_1nn_score".into(),
                        value: total / config.draws as f64,
                        runtime_ms: elapsed_ms(start),
                    });
                    let start = Instant::now();
                    let mut total = 0.0;
                    for draw in 0..config.draws {
                        let s = derive_seed(seed, &[SLICE_STREAM, d as u64, n as u64, draw as u64]);
                        total += max_sliced_score(&data, n, config.p, s)?;
                    }
                    rows.push(ResultRow {
                        seed,
                        params,
                        metric: "max_sliced_1nn_score".into(),
                        value: total / config.draws as f64,
                        runtime_ms: elapsed_ms(start),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new("gaussian", &["d", "n"]);
    reps.into_iter().flatten().for_each(|r| table.push(r));
    Ok(table)
}
