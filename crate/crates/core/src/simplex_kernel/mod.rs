//! Exact action of the filter's transition kernel on finitely supported
//! measures over the probability simplex.
//!
//! An atom `(μ, w)` is pushed to the atoms `(μM(y)/μM(y)1, w·μM(y)1)`, one per
//! symbol with positive predictive mass. Pushing, merging nearby atoms and
//! comparing measures is all this module needs to search for invariant
//! measures, test barycenter identities and check the convex order.

mod convex;
mod distance;
mod invariant;
mod measure;
mod push;

use thiserror::Error;

pub use convex::{convex_order_leq, ConvexOrderResult, ConvexTestFamily, MaxAffine};
pub use distance::{measure_distance, moment_distance, wasserstein_exact, DistanceMethod, MeasureDistance};
pub use invariant::{check_invariant, find_invariant, InvariantCheck, InvariantSearch, SearchStatus};
pub use measure::{barycenter, dirac_at, spread, Atom, AtomicMeasure};
pub(crate) use measure::accumulate_moments;
pub use push::kernel_push;

use crate::tolerances::{ATOM_MERGE_TOL, DEFAULT_ATOM_BUDGET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("atom budget exceeded: {atoms} atoms after merging (budget {budget})")]
    AtomBudgetExceeded { atoms: usize, budget: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid atomic measure: {0}")]
    InvalidMeasure(String),
}

/// Merge tolerance and atom budget for kernel iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub merge_tol: f64,
    pub atom_budget: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { merge_tol: ATOM_MERGE_TOL, atom_budget: DEFAULT_ATOM_BUDGET }
    }
}
