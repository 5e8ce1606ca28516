//! Nearest-neighbor classification scores from precomputed distances.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A dense symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Evaluates `f(i, j)` for `i < j` in parallel and mirrors it.
    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let upper: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| f(i, j))
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (&(i, j), d) in pairs.iter().zip(upper) {
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!("row {i} has {} entries", row.len())));
            }
            values.extend_from_slice(row);
        }
        for i in 0..n {
            for j in 0..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Strict upper-triangle entries, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| self.get(i, j)))
    }
}

/// Majority label among neighbors sorted nearest first; ties go to the label
/// whose first occurrence is nearest.
fn vote(neighbor_labels: &[usize]) -> usize {
    let mut best = neighbor_labels[0];
    let mut best_count = 0;
    for (rank, &label) in neighbor_labels.iter().enumerate() {
        if neighbor_labels[..rank].contains(&label) {
            continue;
        }
        let count = neighbor_labels.iter().filter(|&&l| l == label).count();
        if count > best_count {
            best = label;
            best_count = count;
        }
    }
    best
}

/// Indices of `candidates` sorted by distance, ties to the lower index.
fn ranked(distances: impl Iterator<Item = (usize, f64)>) -> Vec<usize> {
    let mut order: Vec<(usize, f64)> = distances.collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(i, _)| i).collect()
}

/// Leave-one-out `k`-nearest-neighbor accuracy: the fraction of samples whose
/// `k` nearest other samples vote for their own label.
pub fn nn_classification_score(dist: &DistanceMatrix, labels: &[usize], k: usize) -> Result<f64> {
    let n = dist.len();
    if labels.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    if k == 0 || n < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "need at least k + 1 = {} samples, got {n}",
            k + 1
        )));
    }
    let correct = (0..n)
        .filter(|&i| {
            let order = ranked((0..n).filter(|&j| j != i).map(|j| (j, dist.get(i, j))));
            let votes: Vec<usize> = order[..k].iter().map(|&j| labels[j]).collect();
            vote(&votes) == labels[i]
        })
        .count();
    Ok(correct as f64 / n as f64)
}

/// Train/test `k`-nearest-neighbor accuracy. `test_to_train[t][s]` is the
/// distance from test sample `t` to training sample `s`.
pub fn nn_split_score(
    test_to_train: &[Vec<f64>],
    train_labels: &[usize],
    test_labels: &[usize],
    k: usize,
) -> Result<f64> {
    if test_to_train.len() != test_labels.len() || test_to_train.is_empty() {
        return Err(Error::InvalidParameter("test rows and labels differ".into()));
    }
    if k == 0 || train_labels.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need at least k = {k} training samples"
        )));
    }
    let mut correct = 0;
    for (row, &truth) in test_to_train.iter().zip(test_labels) {
        if row.len() != train_labels.len() {
            return Err(Error::InvalidParameter("ragged test-to-train distances".into()));
        }
        let order = ranked(row.iter().copied().enumerate());
        let votes: Vec<usize> = order[..k].iter().map(|&j| train_labels[j]).collect();
        if vote(&votes) == truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / test_labels.len() as f64)
}
