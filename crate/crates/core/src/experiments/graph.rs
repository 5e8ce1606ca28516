//! Heat distributions on random geometric graphs.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, elapsed_ms, nn_classification_score, DistanceMatrix, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::observables::{distance_functions, Anchor};
use crate::ot::{exact_wasserstein_with_limit, DEFAULT_ATOM_LIMIT};
use crate::owd::{owd_from_transforms, transform, Mode};

/// Consecutive disconnected draws tolerated by [`random_geometric_graph`].
pub const MAX_GRAPH_REJECTIONS: usize = 1000;

/// A cell of the uniform 3x3 grid on the unit square. Rows count from the top
/// (`y` near 1), columns from the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    TopLeft,
    Middle,
    BottomRight,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::TopLeft, Region::Middle, Region::BottomRight];

    /// `(row, col)` of the grid cell.
    pub fn cell(self) -> (usize, usize) {
        match self {
            Region::TopLeft => (0, 0),
            Region::Middle => (1, 1),
            Region::BottomRight => (2, 2),
        }
    }

    pub fn contains(self, position: [f64; 2]) -> bool {
        grid_cell(position) == self.cell()
    }
}

fn grid_cell([x, y]: [f64; 2]) -> (usize, usize) {
    let bin = |t: f64| ((3.0 * t).floor() as usize).min(2);
    (bin(1.0 - y), bin(x))
}

/// A connected random geometric graph with unit edge lengths.
#[derive(Debug)]
pub struct GeometricGraph {
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize)>,
    pub radius: f64,
    pub space: Arc<FiniteMetricSpace>,
    eigen: OnceLock<(Vec<f64>, DMatrix<f64>)>,
}

impl GeometricGraph {
    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn region_nodes(&self, region: Region) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| region.contains(self.positions[i]))
            .collect()
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.num_nodes();
        let mut l = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }

    /// Eigenvalues and orthonormal eigenvectors (columns) of the Laplacian,
    /// computed once.
    pub fn eigen(&self) -> &(Vec<f64>, DMatrix<f64>) {
        self.eigen.get_or_init(|| {
            let e = SymmetricEigen::new(self.laplacian());
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        })
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// `n` uniform points in the unit square joined when closer than
/// `sqrt(ln n / n)`; disconnected draws are rejected and redrawn.
pub fn random_geometric_graph(n: usize, seed: u64) -> Result<GeometricGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("graph needs n >= 2 nodes, got {n}")));
    }
    let radius = ((n as f64).ln() / n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GRAPH_REJECTIONS {
        let positions: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (positions[i][0] - positions[j][0], positions[i][1] - positions[j][1]);
                if dx.hypot(dy) < radius {
                    edges.push((i, j));
                }
            }
        }
        if !connected(n, &edges) {
            continue;
        }
        let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        let space = Arc::new(FiniteMetricSpace::graph(n, &weighted)?);
        return Ok(GeometricGraph {
            positions,
            edges,
            radius,
            space,
            eigen: OnceLock::new(),
        });
    }
    Err(Error::TooManyRejections(MAX_GRAPH_REJECTIONS))
}

#[derive(Debug, Clone)]
pub struct HeatDistribution {
    pub space: Arc<FiniteMetricSpace>,
    pub source: usize,
    pub time: f64,
    pub beta: f64,
    /// Nonnegative, summing to one.
    pub values: Vec<f64>,
}

impl HeatDistribution {
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let atoms: Vec<(usize, f64)> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        DiscreteMeasure::new(self.space.clone(), &atoms)
    }
}

/// [`heat_distribution_with_time`] at `t = 0.1 n`.
pub fn heat_distribution(graph: &GeometricGraph, region: Region, beta: f64, seed: u64) -> Result<HeatDistribution> {
    heat_distribution_with_time(graph, region, 0.1 * graph.num_nodes() as f64, beta, seed)
}

/// Heat `exp(-tL) e_s` from a source `s` drawn uniformly in `region`, plus
/// uniform noise in `[-beta M, beta M]` per node (`M` the largest heat value),
/// clamped at zero and renormalized.
pub fn heat_distribution_with_time(
    graph: &GeometricGraph,
    region: Region,
    time: f64,
    beta: f64,
    seed: u64,
) -> Result<HeatDistribution> {
    if !(time >= 0.0 && time.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "heat needs t >= 0 and beta >= 0, got t = {time}, beta = {beta}"
        )));
    }
    let nodes = graph.region_nodes(region);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(match region {
            Region::TopLeft => "top-left",
            Region::Middle => "middle",
            Region::BottomRight => "bottom-right",
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = nodes[rng.random_range(0..nodes.len())];
    let n = graph.num_nodes();
    let mut heat = vec![0.0; n];
    if time == 0.0 {
        heat[source] = 1.0;
    } else {
        let (lambda, v) = graph.eigen();
        for (k, &l) in lambda.iter().enumerate() {
            let c = (-time * l).exp() * v[(source, k)];
            if c == 0.0 {
                continue;
            }
            for (i, h) in heat.iter_mut().enumerate() {
                *h += c * v[(i, k)];
            }
        }
    }
    if beta > 0.0 {
        let m = heat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for h in &mut heat {
            *h += beta * m * rng.random_range(-1.0..=1.0);
        }
    }
    for h in &mut heat {
        *h = h.max(0.0);
    }
    let total: f64 = heat.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("heat vanished after clamping".into()));
    }
    heat.iter_mut().for_each(|h| *h /= total);
    Ok(HeatDistribution {
        space: graph.space.clone(),
        source,
        time,
        beta,
        values: heat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub seed: u64,
    pub repeats: usize,
    pub nodes: Vec<usize>,
    pub betas: Vec<f64>,
    pub per_class: usize,
    /// Anchor counts as fractions of the node count.
    pub anchor_fractions: Vec<f64>,
    /// Heat time is `time_factor * n`.
    pub time_factor: f64,
    pub regions: Vec<Region>,
    /// Grid convention for `regions`; informational.
    pub region_grid: String,
    pub atom_limit: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 3,
            nodes: vec![300],
            betas: vec![0.5, 1.5, 3.0],
            per_class: 5,
            anchor_fractions: vec![0.05, 0.10, 0.15],
            time_factor: 0.1,
            regions: Region::ALL.to_vec(),
            region_grid: "3x3 cells of the unit square, row 0 at y = 1, col 0 at x = 0".into(),
            atom_limit: DEFAULT_ATOM_LIMIT,
        }
    }
}

impl GraphConfig {
    pub fn full() -> Self {
        Self {
            repeats: 10,
            nodes: vec![300, 400, 500, 600, 700],
            betas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            per_class: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("graph config: {what}")));
        if self.repeats == 0 || self.per_class == 0 {
            return bad("repeats and per_class must be >= 1");
        }
        if self.nodes.is_empty() || self.nodes.iter().any(|&n| n < 2) {
            return bad("nodes must be nonempty and >= 2");
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return bad("betas must be nonempty and >= 0");
        }
        if self.anchor_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad("anchor fractions must lie in (0, 1]");
        }
        if !(self.time_factor >= 0.0 && self.time_factor.is_finite()) {
            return bad("time_factor must be >= 0");
        }
        if self.regions.len() < 2 {
            return bad("need at least two regions");
        }
        Ok(())
    }
}

/// Graph attempts before giving up on a graph with a nonempty cell in every
/// configured region.
const REGION_ATTEMPTS: u64 = 100;

fn graph_with_regions(n: usize, regions: &[Region], seed: u64) -> Result<GeometricGraph> {
    for attempt in 0..REGION_ATTEMPTS {
        let g = random_geometric_graph(n, derive_seed(seed, &[attempt]))?;
        if regions.iter().all(|&r| !g.region_nodes(r).is_empty()) {
            return Ok(g);
        }
    }
    Err(Error::EmptyRegion("every sampled graph"))
}

const GRAPH_STREAM: u64 = 1;
const HEAT_STREAM: u64 = 2;
const ANCHOR_STREAM: u64 = 3;

/// Rows per (repetition, n, beta):
/// - `w1_1nn_score`: leave-one-out 1-NN with exact `w_1`;
/// - `ow_1nn_score`, per anchor fraction: distance functions on sampled nodes;
/// - `ow_bound_excess`, per anchor fraction: `max(OW - w_1)` over pairs;
/// - `heat_mass_error` and `heat_min_value` over the generated distributions.
pub fn run_graph(config: &GraphConfig) -> Result<ResultTable> {
    config.validate()?;
    let jobs: Vec<(usize, usize, f64)> = (0..config.repeats)
        .flat_map(|rep| {
            config
                .nodes
                .iter()
                .flat_map(move |&n| config.betas.iter().map(move |&b| (rep, n, b)))
        })
        .collect();
    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(rep, n, beta)| graph_run(config, config.seed.wrapping_add(rep as u64), n, beta))
        .collect::<Result<_>>()?;
    let mut table = ResultTable::new("graph", &["n", "beta", "anchor_frac"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    Ok(table)
}

fn graph_run(config: &GraphConfig, seed: u64, n: usize, beta: f64) -> Result<Vec<ResultRow>> {
    let key = [n as u64, beta.to_bits()];
    let graph = graph_with_regions(n, &config.regions, derive_seed(seed, &[GRAPH_STREAM, key[0], key[1]]))?;
    let time = config.time_factor * n as f64;
    let mut dists = Vec::new();
    let mut labels = Vec::new();
    for (label, &region) in config.regions.iter().enumerate() {
        for k in 0..config.per_class {
            let s = derive_seed(seed, &[HEAT_STREAM, key[0], key[1], label as u64, k as u64]);
            dists.push(heat_distribution_with_time(&graph, region, time, beta, s)?);
            labels.push(label);
        }
    }
    let mass_error = dists
        .iter()
        .map(|h| (h.values.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let min_value = dists
        .iter()
        .flat_map(|h| h.values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let measures: Vec<DiscreteMeasure> = dists.iter().map(|h| h.to_measure()).collect::<Result<_>>()?;

    let row = |frac: &str, metric: &str, value: f64, runtime_ms: f64| ResultRow {
        seed,
        params: vec![n.to_string(), beta.to_string(), frac.to_string()],
        metric: metric.into(),
        value,
        runtime_ms,
    };
    let mut rows = vec![
        row("", "heat_mass_error", mass_error, 0.0),
        row("", "heat_min_value", min_value, 0.0),
    ];

    let start = Instant::now();
    let exact = DistanceMatrix::from_fn(measures.len(), |i, j| {
        Ok(exact_wasserstein_with_limit(&measures[i], &measures[j], 1.0, config.atom_limit)?.0)
    })?;
    rows.push(row(
        "",
        "w1_1nn_score",
        nn_classification_score(&exact, &labels, 1)?,
        elapsed_ms(start),
    ));

    for &frac in &config.anchor_fractions {
        let start = Instant::now();
        let count = ((frac * n as f64).round() as usize).clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[ANCHOR_STREAM, key[0], key[1], frac.to_bits()],
        ));
        let mut picked = index::sample(&mut rng, n, count).into_vec();
        picked.sort_unstable();
        let pool: Vec<Anchor> = picked.into_iter().map(Anchor::Point).collect();
        let set = distance_functions(&graph.space, &pool)?;
        let transforms: Vec<_> = measures
            .par_iter()
            .map(|mu| transform(mu, &set))
            .collect::<Result<_>>()?;
        let ow = DistanceMatrix::from_fn(measures.len(), |i, j| {
            Ok(owd_from_transforms(&transforms[i], &transforms[j], 1.0, Mode::Sup)?.value)
        })?;
        let score = nn_classification_score(&ow, &labels, 1)?;
        let runtime = elapsed_ms(start);
        let excess = ow
            .upper_triangle()
            .zip(exact.upper_triangle())
            .map(|(o, w)| o - w)
            .fold(f64::NEG_INFINITY, f64::max);
        let f = frac.to_string();
        rows.push(row(&f, "ow_1nn_score", score, runtime));
        rows.push(row(&f, "ow_bound_excess", excess, 0.0));
    }
    Ok(rows)
}
