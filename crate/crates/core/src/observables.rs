//! Wedge observables `f(x) = min_i alpha_i d(x, a_i)` (and the max variant),
//! their pushforwards, and the ball-mass identities they support.
//!
//! Every observable built here is 1-Lipschitz: each weighted distance
//! function `alpha d(., a)` with `alpha` in `(0, 1]` is, and pointwise minima
//! and maxima of 1-Lipschitz functions stay 1-Lipschitz.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{DiscreteMeasure, FiniteMetricSpace};
use crate::numeric::CompensatedSum;
use crate::ot::LineMeasure;

/// Largest anchor list accepted by [`subset_expansion`].
pub const MAX_SUBSET_ANCHORS: usize = 20;

/// Largest ball list accepted by [`intersection_ball_mass`].
pub const MAX_INTERSECTION_BALLS: usize = 12;

/// An anchor point: either a point of the space, or an ambient location for
/// spaces that carry coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Anchor {
    Point(usize),
    Ambient(Vec<f64>),
}

impl Anchor {
    fn validate(&self, space: &FiniteMetricSpace) -> Result<()> {
        match self {
            Anchor::Point(index) if *index >= space.size() => Err(Error::IndexOutOfRange {
                index: *index,
                size: space.size(),
            }),
            Anchor::Point(_) => Ok(()),
            Anchor::Ambient(location) => space.check_ambient(location),
        }
    }

    #[inline]
    fn dist(&self, space: &FiniteMetricSpace, x: usize) -> f64 {
        match self {
            Anchor::Point(a) => space.dist(x, *a),
            Anchor::Ambient(location) => space.ambient_metric(space.point(x), location),
        }
    }

    fn point_index(&self) -> Option<usize> {
        match self {
            Anchor::Point(i) => Some(*i),
            Anchor::Ambient(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combinator {
    #[default]
    Min,
    Max,
}

#[derive(Deserialize)]
struct RawObservable {
    anchors: Vec<Anchor>,
    weights: Vec<f64>,
    #[serde(default)]
    combinator: Combinator,
}

impl TryFrom<RawObservable> for Observable {
    type Error = Error;

    fn try_from(raw: RawObservable) -> Result<Self> {
        Observable::new(raw.anchors, raw.weights, raw.combinator)
    }
}

/// A weighted wedge (or join) of distance-to-anchor functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct Observable {
    anchors: Vec<Anchor>,
    weights: Vec<f64>,
    combinator: Combinator,
}

impl Observable {
    /// Weights must lie in `(0, 1]`; a zero weight would make the term
    /// identically zero.
    pub fn new(anchors: Vec<Anchor>, weights: Vec<f64>, combinator: Combinator) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Empty("observable anchors"));
        }
        if anchors.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} anchors but {} weights",
                anchors.len(),
                weights.len()
            )));
        }
        if let Some((position, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && **w <= 1.0))
        {
            return Err(Error::InvalidWeight { position, weight });
        }
        Ok(Self {
            anchors,
            weights,
            combinator,
        })
    }

    /// The distance function `d(., a)`.
    pub fn distance_to(anchor: Anchor) -> Self {
        Self::wedge(vec![anchor])
    }

    /// Unit-weight minimum over the given anchors.
    pub fn wedge(anchors: Vec<Anchor>) -> Self {
        assert!(!anchors.is_empty(), "wedge needs at least one anchor");
        let weights = vec![1.0; anchors.len()];
        Self {
            anchors,
            weights,
            combinator: Combinator::Min,
        }
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn combinator(&self) -> Combinator {
        self.combinator
    }

    /// Wedge order `n`: the observable uses `n + 1` anchors.
    pub fn order(&self) -> usize {
        self.anchors.len() - 1
    }

    pub fn with_combinator(mut self, combinator: Combinator) -> Self {
        self.combinator = combinator;
        self
    }

    pub fn validate_for(&self, space: &FiniteMetricSpace) -> Result<()> {
        self.anchors.iter().try_for_each(|a| a.validate(space))
    }

    /// Evaluation after [`Observable::validate_for`] has succeeded.
    #[inline]
    pub(crate) fn eval_unchecked(&self, space: &FiniteMetricSpace, x: usize) -> f64 {
        let terms = self
            .anchors
            .iter()
            .zip(&self.weights)
            .map(|(a, &w)| w * a.dist(space, x));
        match self.combinator {
            Combinator::Min => terms.fold(f64::INFINITY, f64::min),
            Combinator::Max => terms.fold(0.0, f64::max),
        }
    }

    pub fn eval(&self, space: &FiniteMetricSpace, x: usize) -> Result<f64> {
        self.validate_for(space)?;
        if x >= space.size() {
            return Err(Error::IndexOutOfRange {
                index: x,
                size: space.size(),
            });
        }
        Ok(self.eval_unchecked(space, x))
    }

    /// `f` at an ambient location, for spaces that carry coordinates.
    pub fn eval_at(&self, space: &FiniteMetricSpace, location: &[f64]) -> Result<f64> {
        self.validate_for(space)?;
        space.check_ambient(location)?;
        let terms = self.anchors.iter().zip(&self.weights).map(|(a, &w)| {
            let d = match a {
                Anchor::Point(i) => space.ambient_metric(space.point(*i), location),
                Anchor::Ambient(b) => space.ambient_metric(b, location),
            };
            w * d
        });
        Ok(match self.combinator {
            Combinator::Min => terms.fold(f64::INFINITY, f64::min),
            Combinator::Max => terms.fold(0.0, f64::max),
        })
    }

    /// The pushforward `f_# mu` as a measure on the line.
    pub fn pushforward(&self, mu: &DiscreteMeasure) -> Result<LineMeasure> {
        self.validate_for(mu.space())?;
        Ok(self.pushforward_unchecked(mu))
    }

    pub(crate) fn pushforward_unchecked(&self, mu: &DiscreteMeasure) -> LineMeasure {
        let space = mu.space();
        LineMeasure::from_atoms(
            mu.atoms()
                .iter()
                .map(|&(x, w)| (self.eval_unchecked(space, x), w))
                .collect(),
        )
    }
}

/// `f(x)` for a point index `x`.
pub fn eval_observable(f: &Observable, x: usize, space: &FiniteMetricSpace) -> Result<f64> {
    f.eval(space, x)
}

/// The pushforward `f_# mu`.
pub fn pushforward(mu: &DiscreteMeasure, f: &Observable) -> Result<LineMeasure> {
    f.pushforward(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Unit,
    /// Weights drawn uniformly from `(0, 1]`.
    Uniform,
}

/// How an [`ObservableSet`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum Provenance {
    Sampled {
        seed: u64,
        order: usize,
        count: usize,
        weight_mode: WeightMode,
    },
    Exhaustive,
    SubsetExpansion {
        anchors: usize,
    },
    NestedChain {
        seed: u64,
        order: usize,
        count: usize,
    },
    Explicit,
}

/// A nonempty finite family of observables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSet {
    observables: Vec<Observable>,
    provenance: Provenance,
}

impl ObservableSet {
    pub fn new(observables: Vec<Observable>, provenance: Provenance) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::Empty("observable set"));
        }
        Ok(Self {
            observables,
            provenance,
        })
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn validate_for(&self, space: &FiniteMetricSpace) -> Result<()> {
        self.observables.iter().try_for_each(|f| f.validate_for(space))
    }

    /// Concatenation, with `self` first.
    pub fn union(&self, other: &ObservableSet) -> ObservableSet {
        let mut observables = self.observables.clone();
        observables.extend_from_slice(&other.observables);
        ObservableSet {
            observables,
            provenance: Provenance::Explicit,
        }
    }

    /// Parses the JSON observable-file format.
    pub fn from_json(text: &str) -> serde_json::Result<Vec<Observable>> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.observables).expect("observables serialize")
    }
}

/// Every point of a space as an anchor.
pub fn all_points(space: &FiniteMetricSpace) -> Vec<Anchor> {
    (0..space.size()).map(Anchor::Point).collect()
}

fn check_pool(space: &FiniteMetricSpace, pool: &[Anchor]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::Empty("anchor pool"));
    }
    pool.iter().try_for_each(|a| a.validate(space))
}

/// Samples `count` observables from the anchored family of order `order`:
/// each uses `order + 1` anchors drawn uniformly with replacement from
/// `pool`.
pub fn sample_anchored_set(
    space: &FiniteMetricSpace,
    pool: &[Anchor],
    order: usize,
    count: usize,
    weight_mode: WeightMode,
    seed: u64,
) -> Result<ObservableSet> {
    check_pool(space, pool)?;
    if count == 0 {
        return Err(Error::InvalidParameter("observable count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let observables = (0..count)
        .map(|_| {
            let anchors: Vec<Anchor> = (0..=order)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            let weights = match weight_mode {
                WeightMode::Unit => vec![1.0; anchors.len()],
                WeightMode::Uniform => (0..anchors.len())
                    .map(|_| 1.0 - rng.random::<f64>())
                    .collect(),
            };
            Observable {
                anchors,
                weights,
                combinator: Combinator::Min,
            }
        })
        .collect();
    ObservableSet::new(
        observables,
        Provenance::Sampled {
            seed,
            order,
            count,
            weight_mode,
        },
    )
}

/// The full order-0 family on a pool: one distance function per anchor.
pub fn distance_functions(space: &FiniteMetricSpace, pool: &[Anchor]) -> Result<ObservableSet> {
    check_pool(space, pool)?;
    ObservableSet::new(
        pool.iter().cloned().map(Observable::distance_to).collect(),
        Provenance::Exhaustive,
    )
}

/// Nested sampled families `S_{o_1} ⊆ S_{o_2} ⊆ ...` for increasing orders.
///
/// Draws `count` anchor tuples of length `max(orders) + 1` once. The set for
/// order `o` contains, for every tuple and every listed order `o' <= o`, the
/// unit wedge over the tuple's first `o' + 1` anchors.
pub fn sample_nested_chain(
    space: &FiniteMetricSpace,
    pool: &[Anchor],
    orders: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<ObservableSet>> {
    check_pool(space, pool)?;
    if orders.is_empty() || count == 0 {
        return Err(Error::InvalidParameter("nested chain needs orders and count >= 1".into()));
    }
    if orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("orders must be strictly increasing".into()));
    }
    let top = *orders.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuples: Vec<Vec<Anchor>> = (0..count)
        .map(|_| {
            (0..=top)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect()
        })
        .collect();
    let mut chain = Vec::with_capacity(orders.len());
    let mut accumulated: Vec<Observable> = Vec::new();
    for &order in orders {
        accumulated.extend(tuples.iter().map(|t| Observable::wedge(t[..=order].to_vec())));
        chain.push(ObservableSet::new(
            accumulated.clone(),
            Provenance::NestedChain { seed, order, count },
        )?);
    }
    Ok(chain)
}

/// One unit wedge per nonempty subset of `anchors`, `2^k - 1` in total,
/// ordered by subset bitmask.
pub fn subset_expansion(anchors: &[Anchor], space: &FiniteMetricSpace) -> Result<ObservableSet> {
    let k = anchors.len();
    if k == 0 || k > MAX_SUBSET_ANCHORS {
        return Err(Error::InvalidParameter(format!(
            "subset expansion needs 1..={MAX_SUBSET_ANCHORS} anchors, got {k}"
        )));
    }
    check_pool(space, anchors)?;
    let observables = (1u32..(1 << k))
        .map(|mask| {
            Observable::wedge(
                (0..k)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| anchors[i].clone())
                    .collect(),
            )
        })
        .collect();
    ObservableSet::new(observables, Provenance::SubsetExpansion { anchors: k })
}

fn sorted_balls(balls: &[(Anchor, f64)], space: &FiniteMetricSpace) -> Result<Vec<(Anchor, f64)>> {
    if balls.is_empty() {
        return Err(Error::Empty("ball list"));
    }
    for (position, (center, radius)) in balls.iter().enumerate() {
        if !(*radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball {position} has nonpositive radius {radius}"
            )));
        }
        center.validate(space)?;
    }
    let mut sorted = balls.to_vec();
    sorted.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            a.0.point_index()
                .unwrap_or(usize::MAX)
                .cmp(&b.0.point_index().unwrap_or(usize::MAX))
        })
    });
    Ok(sorted)
}

/// For balls sorted by radius `r_0 <= ... <= r_n`, the wedge
/// `h = f_{a_0} ∧ (r_0/r_1) f_{a_1} ∧ ... ∧ (r_0/r_n) f_{a_n}` whose open
/// sublevel set `h < r_0` is the union of the balls.
fn union_observable_sorted(sorted: &[(Anchor, f64)]) -> (Observable, f64) {
    let r0 = sorted[0].1;
    let observable = Observable {
        anchors: sorted.iter().map(|(a, _)| a.clone()).collect(),
        weights: sorted.iter().map(|(_, r)| r0 / r).collect(),
        combinator: Combinator::Min,
    };
    (observable, r0)
}

/// Observable and threshold representing a union of open balls: a point lies
/// in the union iff `h(x) < threshold`.
pub fn union_ball_observable(
    balls: &[(Anchor, f64)],
    space: &FiniteMetricSpace,
) -> Result<(Observable, f64)> {
    Ok(union_observable_sorted(&sorted_balls(balls, space)?))
}

fn mass_below(line: &LineMeasure, threshold: f64) -> f64 {
    line.atoms()
        .take_while(|&(x, _)| x < threshold)
        .map(|(_, w)| w)
        .collect::<CompensatedSum>()
        .value()
}

/// `mu(B(a_0, r_0) ∪ ... ∪ B(a_n, r_n))`, read off the pushforward of `mu`
/// under the union observable.
pub fn union_ball_mass(mu: &DiscreteMeasure, balls: &[(Anchor, f64)]) -> Result<f64> {
    let (h, threshold) = union_ball_observable(balls, mu.space())?;
    Ok(mass_below(&h.pushforward_unchecked(mu), threshold))
}

/// `mu(B_0 ∩ ... ∩ B_n)` by dual inclusion-exclusion over unions: the signed
/// sum over nonempty index sets `I` of `(-1)^(|I|-1) mu(∪_{i in I} B_i)`, with
/// each union mass taken from the pushforward of its union observable.
pub fn intersection_ball_mass(mu: &DiscreteMeasure, balls: &[(Anchor, f64)]) -> Result<f64> {
    if balls.len() > MAX_INTERSECTION_BALLS {
        return Err(Error::InvalidParameter(format!(
            "at most {MAX_INTERSECTION_BALLS} balls, got {}",
            balls.len()
        )));
    }
    let sorted = sorted_balls(balls, mu.space())?;
    let k = sorted.len();
    let mut total = CompensatedSum::new();
    for mask in 1u32..(1 << k) {
        // Picking indices in sorted order keeps the subset sorted by radius.
        let subset: Vec<(Anchor, f64)> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| sorted[i].clone())
            .collect();
        let (h, threshold) = union_observable_sorted(&subset);
        let mass = mass_below(&h.pushforward_unchecked(mu), threshold);
        if subset.len() % 2 == 1 {
            total.add(mass);
        } else {
            total.add(-mass);
        }
    }
    Ok(total.value())
}

/// Assigns every point to the anchor attaining the weighted minimum, ties
/// to the lowest anchor position.
pub fn weighted_voronoi_cells(f: &Observable, space: &FiniteMetricSpace) -> Result<Vec<usize>> {
    if f.combinator != Combinator::Min {
        return Err(Error::InvalidParameter(
            "weighted Voronoi cells need a min observable".into(),
        ));
    }
    f.validate_for(space)?;
    Ok((0..space.size())
        .map(|x| {
            let mut best = 0;
            let mut best_value = f64::INFINITY;
            for (i, (a, &w)) in f.anchors.iter().zip(&f.weights).enumerate() {
                let value = w * a.dist(space, x);
                if value < best_value {
                    best_value = value;
                    best = i;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn line_space(xs: &[f64]) -> Arc<FiniteMetricSpace> {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Arc::new(FiniteMetricSpace::point_cloud(&pts).unwrap())
    }

    fn random_cloud(n: usize, seed: u64) -> Arc<FiniteMetricSpace> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        Arc::new(FiniteMetricSpace::point_cloud(&pts).unwrap())
    }

    #[test]
    fn single_anchor_is_distance_function() {
        let space = random_cloud(8, 1);
        let f = Observable::distance_to(Anchor::Point(3));
        for x in 0..8 {
            assert_eq!(f.eval(&space, x).unwrap(), space.dist(x, 3));
        }
    }

    #[test]
    fn min_and_max_combinators() {
        // x = 0 at distance 4 from anchor 4 and 6 from anchor 6.
        let space = line_space(&[0.0, 4.0, 6.0]);
        let f = Observable::new(
            vec![Anchor::Point(1), Anchor::Point(2)],
            vec![1.0, 0.5],
            Combinator::Min,
        )
        .unwrap();
        assert_eq!(eval_observable(&f, 0, &space).unwrap(), 3.0);
        let g = f.with_combinator(Combinator::Max);
        assert_eq!(eval_observable(&g, 0, &space).unwrap(), 4.0);
    }

    #[test]
    fn observable_validation() {
        assert!(Observable::new(vec![], vec![], Combinator::Min).is_err());
        assert!(Observable::new(vec![Anchor::Point(0)], vec![0.0], Combinator::Min).is_err());
        assert!(Observable::new(vec![Anchor::Point(0)], vec![1.5], Combinator::Min).is_err());
        assert!(Observable::new(vec![Anchor::Point(0)], vec![1.0, 1.0], Combinator::Min).is_err());
        let graph = FiniteMetricSpace::graph(2, &[(0, 1, 1.0)]).unwrap();
        let ambient = Observable::distance_to(Anchor::Ambient(vec![0.0, 0.0]));
        assert!(matches!(ambient.eval(&graph, 0), Err(Error::AmbientWithoutCoords)));
    }

    #[test]
    fn ambient_anchor_on_cloud() {
        let space = line_space(&[0.0, 2.0]);
        let f = Observable::distance_to(Anchor::Ambient(vec![-1.0]));
        assert_eq!(f.eval(&space, 1).unwrap(), 3.0);
        let wrong_dim = Observable::distance_to(Anchor::Ambient(vec![0.0, 0.0]));
        assert!(wrong_dim.eval(&space, 0).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let space = line_space(&[0.0, 3.0]);
        let f = Observable::distance_to(Anchor::Point(0));
        let dirac = DiscreteMeasure::dirac(space.clone(), 0).unwrap();
        assert_eq!(pushforward(&dirac, &f).unwrap(), LineMeasure::dirac(0.0));
        let half = DiscreteMeasure::uniform(space, &[0, 1]).unwrap();
        let line = pushforward(&half, &f).unwrap();
        assert_eq!(line.locations(), &[0.0, 3.0]);
        assert_eq!(line.weights(), &[0.5, 0.5]);

        let four = line_space(&[0.0, 1.0, 2.0, 3.0]);
        let mu = DiscreteMeasure::uniform(four.clone(), &[0, 1, 2, 3]).unwrap();
        let line = pushforward(&mu, &f).unwrap();
        assert_eq!(line.locations(), &[0.0, 1.0, 2.0, 3.0]);
        assert!(line.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn pushforward_merges_equal_values() {
        let space = line_space(&[-1.0, 0.0, 1.0]);
        let mu = DiscreteMeasure::uniform(space, &[0, 1, 2]).unwrap();
        let line = pushforward(&mu, &Observable::distance_to(Anchor::Point(1))).unwrap();
        assert_eq!(line.locations(), &[0.0, 1.0]);
        assert!((line.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_order_zero_family() {
        let space = random_cloud(5, 2);
        let pool = all_points(&space);
        let set = distance_functions(&space, &pool).unwrap();
        assert_eq!(set.len(), 5);
        for (i, f) in set.observables().iter().enumerate() {
            assert_eq!(f, &Observable::distance_to(Anchor::Point(i)));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let space = random_cloud(20, 3);
        let pool = all_points(&space);
        let a = sample_anchored_set(&space, &pool, 3, 50, WeightMode::Uniform, 99).unwrap();
        let b = sample_anchored_set(&space, &pool, 3, 50, WeightMode::Uniform, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_anchored_set(&space, &pool, 3, 50, WeightMode::Uniform, 100).unwrap();
        assert_ne!(a, c);
        assert!(a.observables().iter().all(|f| f.order() == 3));
        assert!(a
            .observables()
            .iter()
            .flat_map(|f| f.weights())
            .all(|&w| w > 0.0 && w <= 1.0));
        assert!(sample_anchored_set(&space, &[], 0, 1, WeightMode::Unit, 0).is_err());
    }

    fn max_lipschitz_excess(set: &ObservableSet, space: &FiniteMetricSpace) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for f in set.observables() {
            let values: Vec<f64> = (0..space.size()).map(|x| f.eval(space, x).unwrap()).collect();
            for x in 0..space.size() {
                for y in 0..space.size() {
                    worst = worst.max((values[x] - values[y]).abs() - space.dist(x, y));
                }
            }
        }
        worst
    }

    #[test]
    fn sampled_observables_are_one_lipschitz() {
        let space = random_cloud(30, 4);
        let pool = all_points(&space);
        let unit = sample_anchored_set(&space, &pool, 4, 100, WeightMode::Unit, 5).unwrap();
        assert!(max_lipschitz_excess(&unit, &space) <= 1e-9);
        let weighted = sample_anchored_set(&space, &pool, 4, 100, WeightMode::Uniform, 6).unwrap();
        assert!(max_lipschitz_excess(&weighted, &space) <= 1e-9);
        let graph = FiniteMetricSpace::graph(
            12,
            &(0..11).map(|i| (i, i + 1, 1.0 + i as f64 * 0.1)).collect::<Vec<_>>(),
        )
        .unwrap();
        let maxes: Vec<Observable> = sample_anchored_set(&graph, &all_points(&graph), 2, 30, WeightMode::Uniform, 7)
            .unwrap()
            .observables()
            .iter()
            .map(|f| f.clone().with_combinator(Combinator::Max))
            .collect();
        let maxes = ObservableSet::new(maxes, Provenance::Explicit).unwrap();
        assert!(max_lipschitz_excess(&maxes, &graph) <= 1e-9);
    }

    #[test]
    fn min_below_max_pointwise() {
        let space = random_cloud(15, 8);
        let set = sample_anchored_set(&space, &all_points(&space), 3, 20, WeightMode::Unit, 9).unwrap();
        for f in set.observables() {
            let g = f.clone().with_combinator(Combinator::Max);
            for x in 0..15 {
                assert!(f.eval(&space, x).unwrap() <= g.eval(&space, x).unwrap());
            }
        }
    }

    #[test]
    fn nested_chain_is_nested() {
        let space = random_cloud(25, 10);
        let chain = sample_nested_chain(&space, &all_points(&space), &[0, 2, 4], 10, 11).unwrap();
        assert_eq!(chain.iter().map(|s| s.len()).collect::<Vec<_>>(), vec![10, 20, 30]);
        for w in chain.windows(2) {
            assert_eq!(&w[1].observables()[..w[0].len()], w[0].observables());
        }
        // Higher-order wedges extend the anchors of the order-0 member.
        assert_eq!(chain[2].observables()[20].anchors()[0], chain[0].observables()[0].anchors()[0]);
    }

    #[test]
    fn subset_expansion_counts() {
        let space = random_cloud(12, 12);
        let anchors = all_points(&space);
        assert_eq!(subset_expansion(&anchors[..1], &space).unwrap().len(), 1);
        assert_eq!(subset_expansion(&anchors[..3], &space).unwrap().len(), 7);
        assert_eq!(subset_expansion(&anchors[..9], &space).unwrap().len(), 511);
        assert!(subset_expansion(&[], &space).is_err());
        let many: Vec<Anchor> = (0..21).map(|i| Anchor::Point(i % 12)).collect();
        assert!(subset_expansion(&many, &space).is_err());
    }

    #[test]
    fn union_observable_construction() {
        let space = line_space(&[0.0, 5.0]);
        let (f, r) = union_ball_observable(&[(Anchor::Point(0), 1.0)], &space).unwrap();
        assert_eq!(f, Observable::distance_to(Anchor::Point(0)));
        assert_eq!(r, 1.0);

        let (h, r) =
            union_ball_observable(&[(Anchor::Point(1), 2.0), (Anchor::Point(0), 1.0)], &space).unwrap();
        assert_eq!(h.anchors(), &[Anchor::Point(0), Anchor::Point(1)]);
        assert_eq!(h.weights(), &[1.0, 0.5]);
        assert_eq!(r, 1.0);

        assert!(union_ball_observable(&[(Anchor::Point(0), 0.0)], &space).is_err());
        assert!(union_ball_observable(&[(Anchor::Point(0), -1.0)], &space).is_err());
    }

    #[test]
    fn ball_radius_ties_break_by_center() {
        let space = line_space(&[0.0, 1.0, 2.0]);
        let (h, _) = union_ball_observable(
            &[(Anchor::Point(2), 1.0), (Anchor::Point(0), 1.0), (Anchor::Point(1), 1.0)],
            &space,
        )
        .unwrap();
        assert_eq!(h.anchors(), &[Anchor::Point(0), Anchor::Point(1), Anchor::Point(2)]);
    }

    #[test]
    fn single_ball_mass_on_line() {
        // Atoms 0 and 1 lie strictly inside B(0, 1.5).
        let space = line_space(&[0.0, 1.0, 2.0, 3.0]);
        let mu = DiscreteMeasure::uniform(space, &[0, 1, 2, 3]).unwrap();
        assert_eq!(union_ball_mass(&mu, &[(Anchor::Point(0), 1.5)]).unwrap(), 0.5);
        // Boundary atoms are excluded.
        assert_eq!(union_ball_mass(&mu, &[(Anchor::Point(0), 1.0)]).unwrap(), 0.25);
    }

    #[test]
    fn disjoint_and_covering_balls() {
        let space = line_space(&[0.0, 1.0, 10.0, 11.0, 20.0]);
        let mu = DiscreteMeasure::from_masses(space, &[(0, 1.0), (1, 2.0), (2, 3.0), (3, 1.0), (4, 3.0)]).unwrap();
        let b0 = (Anchor::Point(0), 2.0);
        let b1 = (Anchor::Point(2), 2.0);
        let separate = union_ball_mass(&mu, std::slice::from_ref(&b0)).unwrap() + union_ball_mass(&mu, std::slice::from_ref(&b1)).unwrap();
        assert!((union_ball_mass(&mu, &[b0.clone(), b1.clone()]).unwrap() - separate).abs() < 1e-15);
        assert!((union_ball_mass(&mu, &[(Anchor::Point(2), 100.0)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(intersection_ball_mass(&mu, &[b0.clone(), b1]).unwrap().abs() < 1e-15);
        assert_eq!(
            intersection_ball_mass(&mu, std::slice::from_ref(&b0)).unwrap(),
            union_ball_mass(&mu, &[b0]).unwrap()
        );
    }

    fn brute_force(mu: &DiscreteMeasure, balls: &[(Anchor, f64)], all: bool) -> f64 {
        let space = mu.space();
        mu.atoms()
            .iter()
            .filter(|&&(x, _)| {
                let mut inside = balls.iter().map(|(a, r)| a.dist(space, x) < *r);
                if all {
                    inside.all(|b| b)
                } else {
                    inside.any(|b| b)
                }
            })
            .map(|&(_, w)| w)
            .sum()
    }

    #[test]
    fn random_balls_match_membership_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..30 {
            let space = random_cloud(40, 100 + trial);
            let atoms: Vec<(usize, f64)> = (0..40).map(|i| (i, rng.random_range(0.01..1.0))).collect();
            let mu = DiscreteMeasure::from_masses(space.clone(), &atoms).unwrap();
            let union_balls: Vec<(Anchor, f64)> = (0..5)
                .map(|_| (Anchor::Point(rng.random_range(0..40)), rng.random_range(0.05..0.4)))
                .collect();
            let got = union_ball_mass(&mu, &union_balls).unwrap();
            assert!((got - brute_force(&mu, &union_balls, false)).abs() <= 1e-12);

            let center = [rng.random::<f64>(), rng.random::<f64>()];
            let meet: Vec<(Anchor, f64)> = (0..3)
                .map(|_| {
                    let c = vec![center[0] + rng.random_range(-0.1..0.1), center[1] + rng.random_range(-0.1..0.1)];
                    (Anchor::Ambient(c), rng.random_range(0.2..0.6))
                })
                .collect();
            let got = intersection_ball_mass(&mu, &meet).unwrap();
            assert!((got - brute_force(&mu, &meet, true)).abs() <= 1e-10);
        }
    }

    #[test]
    fn too_many_intersection_balls() {
        let space = line_space(&[0.0]);
        let mu = DiscreteMeasure::dirac(space, 0).unwrap();
        let balls = vec![(Anchor::Point(0), 1.0); 13];
        assert!(intersection_ball_mass(&mu, &balls).is_err());
    }

    #[test]
    fn voronoi_cells() {
        let space = line_space(&[0.0, 1.0, 2.0]);
        let one = Observable::distance_to(Anchor::Point(1));
        assert_eq!(weighted_voronoi_cells(&one, &space).unwrap(), vec![0, 0, 0]);

        // Path graph 0-1-2-3-4, anchors at both ends: node 2 ties and goes to
        // anchor position 0.
        let path = FiniteMetricSpace::graph(5, &(0..4).map(|i| (i, i + 1, 1.0)).collect::<Vec<_>>()).unwrap();
        let f = Observable::wedge(vec![Anchor::Point(0), Anchor::Point(4)]);
        assert_eq!(weighted_voronoi_cells(&f, &path).unwrap(), vec![0, 0, 0, 1, 1]);

        // A weighted anchor owns its own location even when another anchor's
        // cell is otherwise larger.
        let g = Observable::new(vec![Anchor::Point(0), Anchor::Point(3)], vec![0.25, 1.0], Combinator::Min).unwrap();
        let cells = weighted_voronoi_cells(&g, &path).unwrap();
        assert_eq!(cells[3], 1);
        assert_eq!(cells[4], 0);
        assert!(weighted_voronoi_cells(&g.with_combinator(Combinator::Max), &path).is_err());
    }

    #[test]
    fn ambient_evaluation_matches_points() {
        let space = random_cloud(10, 21);
        let f = Observable::new(
            vec![Anchor::Point(2), Anchor::Ambient(vec![0.5, 0.5])],
            vec![0.7, 1.0],
            Combinator::Min,
        )
        .unwrap();
        for x in 0..10 {
            let at = f.eval_at(&space, space.point(x)).unwrap();
            assert!((at - f.eval(&space, x).unwrap()).abs() < 1e-15);
        }
        assert!(f.eval_at(&space, &[0.0]).is_err());
        let path = FiniteMetricSpace::graph(2, &[(0, 1, 1.0)]).unwrap();
        assert!(Observable::distance_to(Anchor::Point(0)).eval_at(&path, &[0.0]).is_err());
    }

    #[test]
    fn observable_file_format() {
        let text = r#"[{"anchors": [0, 2], "weights": [1.0, 0.5], "combinator": "max"},
                       {"anchors": [[0.5, 0.5]], "weights": [1.0]}]"#;
        let parsed = ObservableSet::from_json(text).unwrap();
        assert_eq!(parsed[0].combinator(), Combinator::Max);
        assert_eq!(parsed[1].anchors(), &[Anchor::Ambient(vec![0.5, 0.5])]);
        assert_eq!(parsed[1].combinator(), Combinator::Min);
        assert!(ObservableSet::from_json(r#"[{"anchors": [0], "weights": [0.0]}]"#).is_err());
        let set = ObservableSet::new(parsed, Provenance::Explicit).unwrap();
        assert_eq!(ObservableSet::from_json(&set.to_json()).unwrap(), set.observables());
    }
}
