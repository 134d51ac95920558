//! Fixtures shared by the benchmarks.

use hmmerg_core::model::random::{random_model, Sparsity};
use hmmerg_core::{rng, HmmModel};

/// A reproducible entrywise-positive model with `p` states and `q` symbols.
pub fn positive_model(p: usize, q: usize, seed: u64) -> HmmModel {
    random_model(&mut rng::stream(seed, 0), p, q, Sparsity::Positive)
}
