//! Observable Wasserstein distances between discrete measures on finite metric
//! spaces.
//!
//! A wedge observable `f(x) = min_i alpha_i d(x, a_i)` is 1-Lipschitz, so the
//! 1D distance between the pushforwards `f_# mu` and `f_# nu` bounds `w_p(mu, nu)`
//! from below. [`owd::owd_estimate`] takes the supremum (or a power mean) of
//! these bounds over a finite set of observables.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metric;
pub mod numeric;
pub mod observables;
pub mod ot;
pub mod owd;

pub use baselines::{chamfer, sample_slices, sliced_wasserstein, SliceReduction, SliceSet};
pub use error::{Error, Result};
pub use metric::{DiscreteMeasure, FiniteMetricSpace, SpaceKind};
pub use observables::{Anchor, Combinator, Observable, ObservableSet, Provenance, WeightMode};
pub use ot::{exact_wasserstein, wasserstein_1d, LineMeasure, TransportPlan};
pub use owd::{owd_estimate, DeltaCover, Mode, OwdResult};
