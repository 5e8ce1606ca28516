//! Observable Wasserstein estimators.
//!
//! For a finite observable set `S`, the sup estimator is
//! `max_{f in S} w_p(f_# mu, f_# nu)` and the averaged estimator is the
//! `q`-power mean of the same per-observable values. Every observable here is
//! 1-Lipschitz, so each per-observable value, and hence the sup estimate, is
//! a lower bound on `w_p(mu, nu)`.
//!
//! When `S` is anchored on a finite set `A` this is the anchored distance
//! `d^A_{p,n}`; [`greedy_delta_cover`] and [`quantize_measure`] provide the
//! discrete model in which `A` is a delta-cover and measures are snapped onto
//! it.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::numeric::{pow_cost, root_cost, CompensatedSum};
use crate::observables::ObservableSet;
use crate::ot::{check_exponent, wasserstein_1d, LineMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sup,
    /// Power mean with exponent `q >= 1` over the observable set.
    Averaged { q: f64 },
}

impl Mode {
    fn validate(self) -> Result<()> {
        match self {
            Mode::Sup => Ok(()),
            Mode::Averaged { q } if q >= 1.0 && q.is_finite() => Ok(()),
            Mode::Averaged { q } => Err(Error::InvalidParameter(format!(
                "averaging exponent must satisfy q >= 1, got {q}"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Sup => f.write_str("sup"),
            Mode::Averaged { q } => write!(f, "avg(q={q})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OwdResult {
    pub value: f64,
    pub mode: Mode,
    pub p: f64,
    /// `w_p(f_# mu, f_# nu)` for each observable, in set order.
    pub per_observable: Vec<f64>,
    /// First observable attaining the maximum; sup mode only.
    pub argmax_observable: Option<usize>,
}

impl OwdResult {
    /// `{value, mode, p, per_observable, argmax_observable}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "mode": self.mode.to_string(),
            "p": self.p,
            "per_observable": self.per_observable,
            "argmax_observable": self.argmax_observable,
        })
    }
}

/// Pushforwards of `mu` under every observable of `set`, in set order.
pub fn transform(mu: &DiscreteMeasure, set: &ObservableSet) -> Result<Vec<LineMeasure>> {
    set.validate_for(mu.space())?;
    Ok(set
        .observables()
        .par_iter()
        .map(|f| f.pushforward_unchecked(mu))
        .collect())
}

/// Reduces two precomputed transforms (same observable set) to an estimate.
pub fn owd_from_transforms(
    a: &[LineMeasure],
    b: &[LineMeasure],
    p: f64,
    mode: Mode,
) -> Result<OwdResult> {
    check_exponent(p)?;
    mode.validate()?;
    if a.is_empty() {
        return Err(Error::Empty("observable set"));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "transforms have {} and {} observables",
            a.len(),
            b.len()
        )));
    }
    let per_observable: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| wasserstein_1d(x, y, p))
        .collect::<Result<_>>()?;
    Ok(reduce(per_observable, p, mode))
}

fn reduce(per_observable: Vec<f64>, p: f64, mode: Mode) -> OwdResult {
    let (value, argmax_observable) = match mode {
        Mode::Sup => {
            let mut best = 0;
            for (i, &v) in per_observable.iter().enumerate() {
                if v > per_observable[best] {
                    best = i;
                }
            }
            (per_observable[best], Some(best))
        }
        Mode::Averaged { q } => {
            let total: CompensatedSum = per_observable.iter().map(|&v| pow_cost(v, q)).collect();
            (root_cost(total.value() / per_observable.len() as f64, q), None)
        }
    };
    OwdResult {
        value,
        mode,
        p,
        per_observable,
        argmax_observable,
    }
}

/// Observable Wasserstein estimate of `w_p(mu, nu)` over `set`.
pub fn owd_estimate(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    set: &ObservableSet,
    mode: Mode,
) -> Result<OwdResult> {
    mu.require_same_space(nu)?;
    check_exponent(p)?;
    mode.validate()?;
    set.validate_for(mu.space())?;
    let per_observable: Vec<f64> = set
        .observables()
        .par_iter()
        .map(|f| {
            let a = f.pushforward_unchecked(mu);
            let b = f.pushforward_unchecked(nu);
            wasserstein_1d(&a, &b, p)
        })
        .collect::<Result<_>>()?;
    Ok(reduce(per_observable, p, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverKind {
    Greedy,
    FarthestPoint,
}

/// A set of anchors whose open `delta`-balls cover the space.
#[derive(Debug, Clone)]
pub struct DeltaCover {
    space: Arc<FiniteMetricSpace>,
    delta: f64,
    anchor_indices: Vec<usize>,
    kind: CoverKind,
}

impl DeltaCover {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Anchor point indices, ascending.
    pub fn anchor_indices(&self) -> &[usize] {
        &self.anchor_indices
    }

    pub fn kind(&self) -> CoverKind {
        self.kind
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn anchors(&self) -> Vec<crate::observables::Anchor> {
        self.anchor_indices
            .iter()
            .map(|&i| crate::observables::Anchor::Point(i))
            .collect()
    }

    /// Nearest anchor to `x`, ties to the lowest index.
    pub fn nearest_anchor(&self, x: usize) -> usize {
        let mut best = self.anchor_indices[0];
        let mut best_dist = self.space.dist(x, best);
        for &a in &self.anchor_indices[1..] {
            let d = self.space.dist(x, a);
            if d < best_dist {
                best = a;
                best_dist = d;
            }
        }
        best
    }

    fn verified(self) -> Result<Self> {
        for x in 0..self.space.size() {
            let a = self.nearest_anchor(x);
            if self.space.dist(x, a) >= self.delta {
                return Err(Error::InvalidParameter(format!(
                    "point {x} is not covered at radius {}",
                    self.delta
                )));
            }
        }
        Ok(self)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("cover radius must be positive, got {delta}")))
    }
}

/// One pass in index order: a point becomes an anchor unless it already lies
/// within `delta` of an earlier anchor. Anchors end up pairwise at least
/// `delta` apart.
pub fn greedy_delta_cover(space: &Arc<FiniteMetricSpace>, delta: f64) -> Result<DeltaCover> {
    check_delta(delta)?;
    let mut anchors: Vec<usize> = Vec::new();
    for x in 0..space.size() {
        if anchors.iter().all(|&a| space.dist(x, a) >= delta) {
            anchors.push(x);
        }
    }
    DeltaCover {
        space: space.clone(),
        delta,
        anchor_indices: anchors,
        kind: CoverKind::Greedy,
    }
    .verified()
}

/// Farthest-point traversal from point 0 until every point is within
/// `delta` of the chosen set.
pub fn farthest_point_cover(space: &Arc<FiniteMetricSpace>, delta: f64) -> Result<DeltaCover> {
    check_delta(delta)?;
    let n = space.size();
    let mut anchors = vec![0];
    let mut nearest: Vec<f64> = (0..n).map(|x| space.dist(x, 0)).collect();
    loop {
        let (far, &radius) = nearest
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if radius < delta {
            break;
        }
        anchors.push(far);
        for (x, d) in nearest.iter_mut().enumerate() {
            *d = d.min(space.dist(x, far));
        }
    }
    anchors.sort_unstable();
    DeltaCover {
        space: space.clone(),
        delta,
        anchor_indices: anchors,
        kind: CoverKind::FarthestPoint,
    }
    .verified()
}

/// Moves every atom of `mu` to its nearest cover anchor. Each atom moves less
/// than `delta`, so `w_p(mu, quantized) < delta` for every `p`.
pub fn quantize_measure(mu: &DiscreteMeasure, cover: &DeltaCover) -> Result<DiscreteMeasure> {
    if !Arc::ptr_eq(mu.space(), cover.space()) {
        return Err(Error::SpaceMismatch);
    }
    let moved: Vec<(usize, f64)> = mu
        .atoms()
        .iter()
        .map(|&(x, w)| (cover.nearest_anchor(x), w))
        .collect();
    DiscreteMeasure::from_masses(mu.space().clone(), &moved)
}

/// Sup estimates before and after quantizing both measures onto the cover:
/// returns `(d(mu_hat, nu_hat), d(mu, nu))`. Their difference is at most
/// `2 delta`.
pub fn quantized_distance_error(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    set: &ObservableSet,
    cover: &DeltaCover,
) -> Result<(f64, f64)> {
    let mu_hat = quantize_measure(mu, cover)?;
    let nu_hat = quantize_measure(nu, cover)?;
    let d = owd_estimate(mu, nu, p, set, Mode::Sup)?.value;
    let dhat = owd_estimate(&mu_hat, &nu_hat, p, set, Mode::Sup)?.value;
    Ok((dhat, d))
}
