//! Finite metric spaces and discrete probability measures on them.
//!
//! A [`FiniteMetricSpace`] is one of four backings: a Euclidean point cloud,
//! the shortest-path metric of a weighted graph, a set of unit vectors with
//! the geodesic (great-circle) metric, or an explicit distance matrix. Cloud
//! and sphere spaces keep their coordinates and compute distances on demand;
//! graph and matrix spaces materialize the full `n x n` table once.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit norm of sphere inputs before renormalization.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Tolerance on the total mass of user-supplied measures.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    EuclideanCloud,
    GraphShortestPath,
    SphereGeodesic,
    ExplicitMatrix,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::EuclideanCloud => "euclidean-cloud",
            SpaceKind::GraphShortestPath => "graph-shortest-path",
            SpaceKind::SphereGeodesic => "sphere-geodesic",
            SpaceKind::ExplicitMatrix => "explicit-matrix",
        }
    }

    pub fn has_coords(self) -> bool {
        matches!(self, SpaceKind::EuclideanCloud | SpaceKind::SphereGeodesic)
    }
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Euclidean distance between two coordinate vectors of equal length.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Great-circle distance between two unit vectors, in radians.
///
/// Evaluated as `2 atan2(|u - v|, |u + v|)`, which equals `arccos(<u, v>)` for
/// unit vectors but stays accurate for nearly identical and nearly antipodal
/// pairs.
pub fn geodesic(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    kind: SpaceKind,
    size: usize,
    dim: usize,
    coords: Option<Vec<f64>>,
    matrix: Option<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// A Euclidean point cloud. All points must share one dimension.
    pub fn point_cloud<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let (dim, coords) = flatten(points)?;
        Ok(Self {
            kind: SpaceKind::EuclideanCloud,
            size: points.len(),
            dim,
            coords: Some(coords),
            matrix: None,
        })
    }

    /// Unit vectors in `R^(d+1)` with the geodesic metric of the d-sphere.
    ///
    /// Inputs within [`UNIT_NORM_TOL`] of unit norm are renormalized; anything
    /// further off is rejected.
    pub fn sphere<P: AsRef<[f64]>>(vectors: &[P]) -> Result<Self> {
        let (dim, mut coords) = flatten(vectors)?;
        for (index, v) in coords.chunks_mut(dim).enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || (norm - 1.0).abs() > UNIT_NORM_TOL || !norm.is_finite() {
                return Err(Error::NotUnitNorm { index, norm });
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(Self {
            kind: SpaceKind::SphereGeodesic,
            size: vectors.len(),
            dim,
            coords: Some(coords),
            matrix: None,
        })
    }

    /// Shortest-path metric of an undirected graph with positive edge weights.
    ///
    /// Runs Dijkstra from every node and stores the full distance table.
    pub fn graph(num_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Empty("graph has no nodes"));
        }
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_nodes];
        for (position, &(i, j, w)) in edges.iter().enumerate() {
            for index in [i, j] {
                if index >= num_nodes {
                    return Err(Error::IndexOutOfRange {
                        index,
                        size: num_nodes,
                    });
                }
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeight {
                    position,
                    weight: w,
                });
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }

        let rows: Vec<Vec<f64>> = (0..num_nodes)
            .into_par_iter()
            .map(|source| dijkstra(&adjacency, source))
            .collect();
        for (i, row) in rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|d| d.is_infinite()) {
                return Err(Error::Disconnected(i, j));
            }
        }
        // Symmetrize exactly: both directions sum the same edges but possibly
        // in a different order.
        let mut matrix = rows.concat();
        for i in 0..num_nodes {
            for j in (i + 1)..num_nodes {
                let d = matrix[i * num_nodes + j].min(matrix[j * num_nodes + i]);
                matrix[i * num_nodes + j] = d;
                matrix[j * num_nodes + i] = d;
            }
        }
        Ok(Self {
            kind: SpaceKind::GraphShortestPath,
            size: num_nodes,
            dim: 0,
            coords: None,
            matrix: Some(matrix),
        })
    }

    /// An explicit distance matrix. Checks zero diagonal, symmetry and
    /// nonnegativity; the triangle inequality is left to
    /// [`FiniteMetricSpace::triangle_violation`].
    pub fn from_matrix<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        let mut matrix = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != size {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            matrix.extend_from_slice(row);
        }
        for i in 0..size {
            if matrix[i * size + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..size {
                let d = matrix[i * size + j];
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {d}")));
                }
                if d != matrix[j * size + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            kind: SpaceKind::ExplicitMatrix,
            size,
            dim: 0,
            coords: None,
            matrix: Some(matrix),
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Ambient dimension for spaces with coordinates.
    pub fn dim(&self) -> Option<usize> {
        self.coords.as_ref().map(|_| self.dim)
    }

    pub fn has_coords(&self) -> bool {
        self.coords.is_some()
    }

    /// Coordinates of point `i`. Panics on spaces without coordinates.
    pub fn point(&self, i: usize) -> &[f64] {
        let coords = self
            .coords
            .as_ref()
            .expect("space has no ambient coordinates");
        &coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self.kind {
            SpaceKind::EuclideanCloud => euclidean(self.point(i), self.point(j)),
            SpaceKind::SphereGeodesic => geodesic(self.point(i), self.point(j)),
            SpaceKind::GraphShortestPath | SpaceKind::ExplicitMatrix => {
                self.matrix.as_ref().expect("matrix-backed space")[i * self.size + j]
            }
        }
    }

    /// Distance from point `i` to an ambient location, for cloud and sphere
    /// spaces.
    pub fn dist_to_ambient(&self, i: usize, location: &[f64]) -> Result<f64> {
        self.check_ambient(location)?;
        Ok(self.ambient_metric(self.point(i), location))
    }

    pub(crate) fn check_ambient(&self, location: &[f64]) -> Result<()> {
        if self.coords.is_none() {
            return Err(Error::AmbientWithoutCoords);
        }
        if location.len() != self.dim {
            return Err(Error::AnchorDimension {
                expected: self.dim,
                found: location.len(),
            });
        }
        Ok(())
    }

    /// The ambient metric between two coordinate vectors. Only meaningful for
    /// cloud and sphere spaces.
    #[inline]
    pub(crate) fn ambient_metric(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            SpaceKind::SphereGeodesic => geodesic(a, b),
            _ => euclidean(a, b),
        }
    }

    pub fn diameter(&self) -> f64 {
        (0..self.size)
            .into_par_iter()
            .map(|i| (0..self.size).map(|j| self.dist(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// First triple `(i, j, k)` with `d(i,k) > d(i,j) + d(j,k) + tol`, if any.
    /// Cubic in the number of points.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.size;
        for i in 0..n {
            for j in 0..n {
                let dij = self.dist(i, j);
                for k in 0..n {
                    if self.dist(i, k) > dij + self.dist(j, k) + tol {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

fn flatten<P: AsRef<[f64]>>(points: &[P]) -> Result<(usize, Vec<f64>)> {
    let first = points.first().ok_or(Error::Empty("point list"))?;
    let dim = first.as_ref().len();
    if dim == 0 {
        return Err(Error::Empty("point has no coordinates"));
    }
    let mut coords = Vec::with_capacity(points.len() * dim);
    for (row, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::RaggedDimensions {
                row,
                expected: dim,
                found: p.len(),
            });
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate {bad} in row {row}"
            )));
        }
        coords.extend_from_slice(p);
    }
    Ok((dim, coords))
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adjacency[node] {
            let candidate = d + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(HeapEntry {
                    dist: candidate,
                    node: next,
                });
            }
        }
    }
    dist
}

/// A finitely supported probability measure on a [`FiniteMetricSpace`].
///
/// Atoms are kept sorted by point index with strictly positive weights that
/// sum to one.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    space: Arc<FiniteMetricSpace>,
    atoms: Vec<(usize, f64)>,
}

impl DiscreteMeasure {
    /// Builds a measure from `(index, weight)` pairs whose weights already sum
    /// to one (within [`MASS_TOL`]). Duplicate indices are merged.
    pub fn new(space: Arc<FiniteMetricSpace>, atoms: &[(usize, f64)]) -> Result<Self> {
        let merged = merge_atoms(&space, atoms)?;
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::WeightSum(total));
        }
        Ok(Self::renormalized(space, merged, total))
    }

    /// Builds a measure from arbitrary positive masses, normalizing them.
    pub fn from_masses(space: Arc<FiniteMetricSpace>, atoms: &[(usize, f64)]) -> Result<Self> {
        let merged = merge_atoms(&space, atoms)?;
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        Ok(Self::renormalized(space, merged, total))
    }

    /// Weight `1/k` on each of the `k` listed indices; repeated indices
    /// accumulate weight.
    pub fn uniform(space: Arc<FiniteMetricSpace>, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("measure support"));
        }
        let atoms: Vec<(usize, f64)> = indices.iter().map(|&i| (i, 1.0)).collect();
        Self::from_masses(space, &atoms)
    }

    pub fn dirac(space: Arc<FiniteMetricSpace>, index: usize) -> Result<Self> {
        Self::uniform(space, &[index])
    }

    fn renormalized(space: Arc<FiniteMetricSpace>, mut atoms: Vec<(usize, f64)>, total: f64) -> Self {
        if total != 1.0 {
            atoms.iter_mut().for_each(|(_, w)| *w /= total);
        }
        Self { space, atoms }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn same_space(&self, other: &DiscreteMeasure) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    pub(crate) fn require_same_space(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

fn merge_atoms(space: &FiniteMetricSpace, atoms: &[(usize, f64)]) -> Result<Vec<(usize, f64)>> {
    if atoms.is_empty() {
        return Err(Error::Empty("measure support"));
    }
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (position, &(index, weight)) in atoms.iter().enumerate() {
        if index >= space.size() {
            return Err(Error::IndexOutOfRange {
                index,
                size: space.size(),
            });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidWeight { position, weight });
        }
        *merged.entry(index).or_insert(0.0) += weight;
    }
    Ok(merged.into_iter().collect())
}
