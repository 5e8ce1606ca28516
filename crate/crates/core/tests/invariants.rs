use std::sync::Arc;

use owdist::baselines::{sample_slices, slice_distances, SliceReduction};
use owdist::observables::{all_points, sample_anchored_set};
use owdist::ot::exact_wasserstein;
use owdist::owd::{farthest_point_cover, greedy_delta_cover, quantized_distance_error};
use owdist::{
    owd_estimate, sliced_wasserstein, DiscreteMeasure, FiniteMetricSpace, Mode, WeightMode,
};
use proptest::prelude::*;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Arc<FiniteMetricSpace> {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    Arc::new(FiniteMetricSpace::point_cloud(&pts).unwrap())
}

fn graph(n: usize, rng: &mut ChaCha8Rng) -> Arc<FiniteMetricSpace> {
    let mut edges: Vec<(usize, usize, f64)> = (1..n)
        .map(|i| (rng.random_range(0..i), i, rng.random_range(0.5..3.0)))
        .collect();
    for _ in 0..n / 2 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            edges.push((i, j, rng.random_range(0.5..3.0)));
        }
    }
    Arc::new(FiniteMetricSpace::graph(n, &edges).unwrap())
}

fn measure(space: &Arc<FiniteMetricSpace>, atoms: usize, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let support = index::sample(rng, space.size(), atoms.min(space.size()));
    let masses: Vec<(usize, f64)> = support.into_iter().map(|i| (i, rng.random_range(0.1..1.0))).collect();
    DiscreteMeasure::from_masses(space.clone(), &masses).unwrap()
}

fn setup(seed: u64, use_graph: bool) -> (DiscreteMeasure, DiscreteMeasure, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..30);
    let space = if use_graph { graph(n, &mut rng) } else { cloud(n, 3, &mut rng) };
    let a = rng.random_range(1..=n);
    let b = rng.random_range(1..=n);
    let mu = measure(&space, a, &mut rng);
    let nu = measure(&space, b, &mut rng);
    (mu, nu, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observables_are_one_lipschitz(seed in any::<u64>(), order in 0usize..5) {
        let (mu, _, _) = setup(seed, seed % 2 == 0);
        let space = mu.space();
        let set = sample_anchored_set(space, &all_points(space), order, 5, WeightMode::Uniform, seed).unwrap();
        for f in set.observables() {
            for x in 0..space.size() {
                for y in 0..space.size() {
                    let gap = (f.eval(space, x).unwrap() - f.eval(space, y).unwrap()).abs();
                    prop_assert!(gap <= space.dist(x, y) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn estimates_sit_below_exact(seed in any::<u64>(), order in 0usize..4, p in prop::sample::select(vec![1.0, 1.5, 2.0])) {
        let (mu, nu, _) = setup(seed, seed % 3 == 0);
        let space = mu.space();
        let set = sample_anchored_set(space, &all_points(space), order, 8, WeightMode::Unit, seed).unwrap();
        let sup = owd_estimate(&mu, &nu, p, &set, Mode::Sup).unwrap();
        let avg = owd_estimate(&mu, &nu, p, &set, Mode::Averaged { q: 2.0 }).unwrap();
        let (w, _) = exact_wasserstein(&mu, &nu, p).unwrap();
        prop_assert!(sup.value <= w + 1e-9);
        prop_assert!(avg.value <= sup.value + 1e-12);
        let k = sup.argmax_observable.unwrap();
        prop_assert_eq!(sup.per_observable[k], sup.value);
    }

    #[test]
    fn estimates_are_symmetric_and_vanish_on_the_diagonal(seed in any::<u64>()) {
        let (mu, nu, _) = setup(seed, false);
        let space = mu.space();
        let set = sample_anchored_set(space, &all_points(space), 1, 6, WeightMode::Uniform, seed).unwrap();
        let ab = owd_estimate(&mu, &nu, 1.0, &set, Mode::Sup).unwrap().value;
        let ba = owd_estimate(&nu, &mu, 1.0, &set, Mode::Sup).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert_eq!(owd_estimate(&mu, &mu, 1.0, &set, Mode::Sup).unwrap().value, 0.0);
    }

    #[test]
    fn sup_grows_with_the_set(seed in any::<u64>()) {
        let (mu, nu, _) = setup(seed, true);
        let space = mu.space();
        let a = sample_anchored_set(space, &all_points(space), 2, 4, WeightMode::Unit, seed).unwrap();
        let b = sample_anchored_set(space, &all_points(space), 0, 4, WeightMode::Unit, seed ^ 1).unwrap();
        let both = a.union(&b);
        let small = owd_estimate(&mu, &nu, 2.0, &a, Mode::Sup).unwrap().value;
        let large = owd_estimate(&mu, &nu, 2.0, &both, Mode::Sup).unwrap().value;
        prop_assert!(small <= large);
    }

    #[test]
    fn slices_sit_below_exact(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 2.0])) {
        let (mu, nu, _) = setup(seed, false);
        let slices = sample_slices(3, 12, seed).unwrap();
        let per = slice_distances(&mu, &nu, p, &slices).unwrap();
        let max = sliced_wasserstein(&mu, &nu, p, &slices, SliceReduction::Max).unwrap();
        let mean = sliced_wasserstein(&mu, &nu, p, &slices, SliceReduction::Mean).unwrap();
        let (w, _) = exact_wasserstein(&mu, &nu, p).unwrap();
        prop_assert!(max <= w + 1e-9);
        prop_assert!(mean <= max + 1e-12);
        prop_assert_eq!(per.iter().copied().fold(0.0, f64::max), max);
    }

    #[test]
    fn covers_are_stable(seed in any::<u64>(), frac in 0.05f64..0.8) {
        let (mu, nu, _) = setup(seed, seed % 2 == 1);
        let space = mu.space().clone();
        let delta = frac * space.diameter().max(1e-6);
        for cover in [greedy_delta_cover(&space, delta).unwrap(), farthest_point_cover(&space, delta).unwrap()] {
            for x in 0..space.size() {
                prop_assert!(space.dist(x, cover.nearest_anchor(x)) < delta);
            }
            let set = sample_anchored_set(&space, &cover.anchors(), 1, 6, WeightMode::Uniform, seed).unwrap();
            let (dhat, d) = quantized_distance_error(&mu, &nu, 1.0, &set, &cover).unwrap();
            prop_assert!((dhat - d).abs() <= 2.0 * delta + 1e-9);
        }
    }
}

#[test]
fn single_observable_family_covers_k_r_duality_on_a_path() {
    // On a path graph with unit edges, the distance function from an
    // endpoint is an isometric embedding into the line, so the estimate
    // equals w_1 for every pair of measures.
    let n = 12;
    let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    let space = Arc::new(FiniteMetricSpace::graph(n, &edges).unwrap());
    let set = owdist::observables::distance_functions(&space, &[owdist::Anchor::Point(0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let mu = measure(&space, 5, &mut rng);
        let nu = measure(&space, 7, &mut rng);
        let est = owd_estimate(&mu, &nu, 1.0, &set, Mode::Sup).unwrap().value;
        let (w, _) = exact_wasserstein(&mu, &nu, 1.0).unwrap();
        assert!((est - w).abs() < 1e-12, "{est} vs {w}");
    }
}
