//! Numerical tolerances shared across the crate.

/// Probability vectors and row sums must total one within this.
pub const SUM_TOL: f64 = 1e-12;

/// Stationary distribution residual `‖λP − λ‖₁`.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Above this many states the stationary law is found by power iteration.
pub const DIRECT_SOLVE_MAX_STATES: usize = 512;

pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Atoms closer than this in `l1` are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

pub const DEFAULT_ATOM_BUDGET: usize = 100_000;

/// Slack for convex-order comparisons and Jensen-type inequalities.
pub const CONVEX_ORDER_SLACK: f64 = 1e-10;

/// Exact W1 is used when both supports have at most this many atoms.
pub const EXACT_TRANSPORT_MAX_ATOMS: usize = 64;

/// Rounding grid for hashing normalized products and atomic measures.
pub const HASH_ROUNDING: f64 = 1e-9;

/// Two normalized products sharing a hash bucket must agree to this before
/// they are treated as the same element of a closed product set.
pub const CLOSURE_IDENTITY_TOL: f64 = 1e-12;

/// Residual below which a candidate invariant measure counts as certified.
pub const INVARIANT_CERT_TOL: f64 = 1e-12;

/// Two certified invariant measures closer than this are not treated as
/// distinct.
pub const INVARIANT_SEPARATION_TOL: f64 = 1e-6;

/// Default window for the min/max filter proxies.
pub const DEFAULT_WINDOW: usize = 64;

/// Stability-curve decay threshold and horizon used by the verdict.
pub const STABILITY_THRESHOLD: f64 = 1e-3;
pub const STABILITY_HORIZON: usize = 10_000;

/// Occupation-measure moment-gap threshold, horizon and burn-in.
pub const OCCUPATION_THRESHOLD: f64 = 0.02;
pub const OCCUPATION_HORIZON: usize = 10_000;
pub const OCCUPATION_BURNIN: usize = 1_000;
