//! Relative error of observable estimates for measures on spheres.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, elapsed_ms, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::observables::{subset_expansion, Anchor, MAX_SUBSET_ANCHORS};
use crate::ot::{check_exponent, exact_wasserstein_with_limit, DEFAULT_ATOM_LIMIT};
use crate::owd::{owd_estimate, Mode};

fn unit_gaussian(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform points on the unit `d`-sphere in `R^{d+1}`.
fn sphere_points(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..m).map(|_| unit_gaussian(d + 1, rng)).collect()
}

/// Two independent uniform `m`-point samples of the `d`-sphere, embedded in
/// one space: `mu` on points `0..m`, `nu` on `m..2m`.
pub fn sphere_pair(d: usize, m: usize, seed: u64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "sphere pair needs d >= 1 and m >= 1, got d = {d}, m = {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sphere_points(d, 2 * m, &mut rng);
    let space = Arc::new(FiniteMetricSpace::sphere(&points)?);
    let first: Vec<usize> = (0..m).collect();
    let second: Vec<usize> = (m..2 * m).collect();
    Ok((
        DiscreteMeasure::uniform(space.clone(), &first)?,
        DiscreteMeasure::uniform(space, &second)?,
    ))
}

/// `(w_exact - owd_est) / w_exact`.
pub fn relative_error(w_exact: f64, owd_est: f64) -> Result<f64> {
    if w_exact > 0.0 {
        return Ok((w_exact - owd_est) / w_exact);
    }
    if owd_est > 0.0 {
        return Err(Error::LowerBoundViolation(owd_est - w_exact));
    }
    Err(Error::InvalidParameter("relative error needs w_exact > 0".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereConfig {
    pub seed: u64,
    pub repeats: usize,
    pub dims: Vec<usize>,
    /// Points per measure.
    pub samples: Vec<usize>,
    /// Anchors per collection.
    pub functions: Vec<usize>,
    /// Collections per estimate.
    pub observables: Vec<usize>,
    /// Size of the anchor pool sampled from the sphere.
    pub anchor_pool: usize,
    pub p: f64,
    pub atom_limit: usize,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 3,
            dims: vec![2, 3],
            samples: vec![100],
            functions: vec![1, 3, 5],
            observables: vec![40, 80, 120, 160, 200],
            anchor_pool: 1000,
            p: 1.0,
            atom_limit: DEFAULT_ATOM_LIMIT,
        }
    }
}

impl SphereConfig {
    pub fn full() -> Self {
        Self {
            repeats: 10,
            samples: vec![100, 200],
            functions: vec![1, 3, 5, 7, 9],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        let bad = |what: &str| Err(Error::InvalidParameter(format!("sphere config: {what}")));
        if self.repeats == 0 || self.anchor_pool == 0 {
            return bad("repeats and anchor_pool must be >= 1");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be nonempty and >= 1");
        }
        if self.samples.is_empty() || self.samples.contains(&0) {
            return bad("samples must be nonempty and >= 1");
        }
        if self.observables.is_empty() || self.observables.contains(&0) {
            return bad("observables must be nonempty and >= 1");
        }
        if self.functions.is_empty()
            || self
                .functions
                .iter()
                .any(|&f| f == 0 || f > MAX_SUBSET_ANCHORS || f > self.anchor_pool)
        {
            return bad("functions must lie in 1..=min(20, anchor_pool)");
        }
        Ok(())
    }
}

const PAIR_STREAM: u64 = 1;
const POOL_STREAM: u64 = 2;
const COLLECTION_STREAM: u64 = 3;

/// Rows per (repetition, d, m):
/// - `w1_exact`: exact `w_p`, timed;
/// - per (n_f, n_o): `ow_estimate` and `relative_error` of the sup estimate
///   over all subset wedges of the first `n_o` collections of `n_f` anchors.
///
/// Collections for a given `n_f` are drawn once and shared across `n_o`, so
/// estimates are nested in `n_o`. The reported runtime is the cost of the
/// collections used.
pub fn run_sphere(config: &SphereConfig) -> Result<ResultTable> {
    config.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..config.repeats)
        .flat_map(|rep| {
            config
                .dims
                .iter()
                .flat_map(move |&d| config.samples.iter().map(move |&m| (rep, d, m)))
        })
        .collect();
    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(rep, d, m)| sphere_run(config, config.seed.wrapping_add(rep as u64), d, m))
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new("sphere", &["d", "m", "nf", "no"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    Ok(table)
}

fn sphere_run(config: &SphereConfig, seed: u64, d: usize, m: usize) -> Result<Vec<ResultRow>> {
    let key = [d as u64, m as u64];
    let (mu, nu) = sphere_pair(d, m, derive_seed(seed, &[PAIR_STREAM, key[0], key[1]]))?;
    let mut pool_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[POOL_STREAM, key[0], key[1]]));
    let pool: Vec<Anchor> = sphere_points(d, config.anchor_pool, &mut pool_rng)
        .into_iter()
        .map(Anchor::Ambient)
        .collect();

    let row = |nf: &str, no: &str, metric: &str, value: f64, runtime_ms: f64| ResultRow {
        seed,
        params: vec![d.to_string(), m.to_string(), nf.to_string(), no.to_string()],
        metric: metric.into(),
        value,
        runtime_ms,
    };

    let start = Instant::now();
    let (w, _) = exact_wasserstein_with_limit(&mu, &nu, config.p, config.atom_limit)?;
    let mut rows = vec![row("", "", "w1_exact", w, elapsed_ms(start))];

    let mut counts = config.observables.clone();
    counts.sort_unstable();
    counts.dedup();
    let most = *counts.last().expect("validated nonempty");
    for &nf in &config.functions {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[COLLECTION_STREAM, key[0], key[1], nf as u64],
        ));
        let collections: Vec<Vec<Anchor>> = (0..most)
            .map(|_| {
                index::sample(&mut rng, pool.len(), nf)
                    .into_iter()
                    .map(|i| pool[i].clone())
                    .collect()
            })
            .collect();
        let per_collection: Vec<(f64, f64)> = collections
            .par_iter()
            .map(|anchors| {
                let start = Instant::now();
                let set = subset_expansion(anchors, mu.space())?;
                let v = owd_estimate(&mu, &nu, config.p, &set, Mode::Sup)?.value;
                Ok((v, elapsed_ms(start)))
            })
            .collect::<Result<_>>()?;
        for &no in &counts {
            let (est, ms) = per_collection[..no]
                .iter()
                .fold((0.0f64, 0.0), |(v, t), &(cv, ct)| (v.max(cv), t + ct));
            let (f, o) = (nf.to_string(), no.to_string());
            rows.push(row(&f, &o, "ow_estimate", est, ms));
            rows.push(row(&f, &o, "relative_error", relative_error(w, est)?, ms));
        }
    }
    Ok(rows)
}
