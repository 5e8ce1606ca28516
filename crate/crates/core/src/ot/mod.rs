//! Optimal transport solvers: the closed-form quantile solution on the real
//! line and an exact network simplex for general finite metric spaces.

mod simplex;

pub use simplex::{
    exact_wasserstein, exact_wasserstein_with_limit, solve_transport, TransportPlan,
    TransportSolution, DEFAULT_ATOM_LIMIT,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MASS_TOL;
use crate::numeric::{pow_cost, root_cost, CompensatedSum};

/// A discrete probability measure on the real line.
///
/// Locations are strictly increasing; atoms at equal locations are merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl LineMeasure {
    /// Validated constructor. Weights must be positive and sum to one.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::Empty("line measure"));
        }
        for (position, &(x, w)) in atoms.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite location {x} at position {position}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeight {
                    position,
                    weight: w,
                });
            }
        }
        let measure = Self::from_atoms(atoms);
        let total = measure.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::WeightSum(total));
        }
        Ok(measure)
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            locations: vec![x],
            weights: vec![1.0],
        }
    }

    /// Sorts and merges without validation. Callers guarantee positive,
    /// finite weights with unit total.
    pub(crate) fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locations: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match locations.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    locations.push(x);
                    weights.push(w);
                }
            }
        }
        Self { locations, weights }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.weights.iter().copied())
    }

    /// Translates every atom by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self::from_atoms(self.atoms().map(|(x, w)| (x + c, w)).collect())
    }

    /// Cumulative weights with the last breakpoint pinned to exactly 1.
    fn breakpoints(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::new();
        let mut out: Vec<f64> = self
            .weights
            .iter()
            .map(|&w| {
                acc.add(w);
                acc.value().min(1.0)
            })
            .collect();
        *out.last_mut().expect("nonempty") = 1.0;
        out
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Wasserstein-p distance between two measures on the line.
///
/// The quantile functions of both measures are step functions on `[0, 1]`;
/// merging their cumulative-weight breakpoints gives a common refinement on
/// which both are constant, so the integral of `|F^-1 - G^-1|^p` is a finite
/// sum.
pub fn wasserstein_1d(a: &LineMeasure, b: &LineMeasure, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(root_cost(wasserstein_1d_cost(a, b, p), p))
}

/// `w_p^p` between two line measures, without the root.
pub(crate) fn wasserstein_1d_cost(a: &LineMeasure, b: &LineMeasure, p: f64) -> f64 {
    let ca = a.breakpoints();
    let cb = b.breakpoints();
    let (xa, xb) = (a.locations(), b.locations());
    let mut total = CompensatedSum::new();
    let (mut i, mut j) = (0, 0);
    let mut previous = 0.0;
    while i < ca.len() && j < cb.len() {
        let next = ca[i].min(cb[j]);
        let segment = next - previous;
        if segment > 0.0 {
            total.add(segment * pow_cost((xa[i] - xb[j]).abs(), p));
        }
        previous = next;
        if ca[i] == next {
            i += 1;
        }
        if cb[j] == next {
            j += 1;
        }
    }
    total.value().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(xs: &[f64]) -> LineMeasure {
        let w = 1.0 / xs.len() as f64;
        LineMeasure::new(xs.iter().map(|&x| (x, w))).unwrap()
    }

    #[test]
    fn diracs() {
        let d = wasserstein_1d(&LineMeasure::dirac(0.0), &LineMeasure::dirac(1.0), 2.0).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn identical_measures() {
        let a = uniform(&[0.0, 1.5, 2.0, 7.0]);
        assert_eq!(wasserstein_1d(&a, &a, 1.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&a, &a, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn two_point_uniforms() {
        // Sorted matching moves each half unit of mass by 1; the crossed
        // coupling costs (3 + 1) / 2 = 2 and is not optimal.
        let a = uniform(&[0.0, 2.0]);
        let b = uniform(&[1.0, 3.0]);
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_mass_move() {
        let a = LineMeasure::new([(0.0, 0.75), (1.0, 0.25)]).unwrap();
        let b = LineMeasure::dirac(0.0);
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_exponent() {
        let a = LineMeasure::dirac(0.0);
        assert!(matches!(
            wasserstein_1d(&a, &a, 0.5),
            Err(Error::InvalidExponent(_))
        ));
        assert!(wasserstein_1d(&a, &a, f64::NAN).is_err());
    }

    #[test]
    fn equal_locations_merge() {
        let m = LineMeasure::new([(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        assert_eq!(m.locations(), &[0.0, 1.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn line_measure_validation() {
        assert!(LineMeasure::new([(0.0, 0.5)]).is_err());
        assert!(LineMeasure::new([(0.0, 1.5), (1.0, -0.5)]).is_err());
        assert!(LineMeasure::new(std::iter::empty()).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn line_measure() -> impl Strategy<Value = LineMeasure> {
            prop::collection::vec((-10.0f64..10.0, 0.01f64..1.0), 1..12).prop_map(|atoms| {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                LineMeasure::from_atoms(atoms.into_iter().map(|(x, w)| (x, w / total)).collect())
            })
        }

        proptest! {
            #[test]
            fn symmetric(a in line_measure(), b in line_measure(), p in 1.0f64..4.0) {
                let ab = wasserstein_1d(&a, &b, p).unwrap();
                let ba = wasserstein_1d(&b, &a, p).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12);
            }

            #[test]
            fn triangle(a in line_measure(), b in line_measure(), c in line_measure(), p in 1.0f64..4.0) {
                let ac = wasserstein_1d(&a, &c, p).unwrap();
                let ab = wasserstein_1d(&a, &b, p).unwrap();
                let bc = wasserstein_1d(&b, &c, p).unwrap();
                prop_assert!(ac <= ab + bc + 1e-9);
            }

            #[test]
            fn monotone_in_exponent(a in line_measure(), b in line_measure()) {
                let w1 = wasserstein_1d(&a, &b, 1.0).unwrap();
                let w2 = wasserstein_1d(&a, &b, 2.0).unwrap();
                let w4 = wasserstein_1d(&a, &b, 4.0).unwrap();
                prop_assert!(w1 <= w2 + 1e-9);
                prop_assert!(w2 <= w4 + 1e-9);
            }

            #[test]
            fn translation_invariant(a in line_measure(), b in line_measure(), c in -5.0f64..5.0) {
                // Shift by a dyadic amount so that translated locations are exact.
                let c = (c * 8.0).round() / 8.0;
                let d = wasserstein_1d(&a, &b, 2.0).unwrap();
                let shifted = wasserstein_1d(&a.shifted(c), &b.shifted(c), 2.0).unwrap();
                prop_assert!((d - shifted).abs() <= 1e-12);
            }
        }
    }
}
