//! Reproducible random streams.
//!
//! Every randomized routine draws from a ChaCha stream keyed by
//! `(seed, stream id)`, so independent replications can run in parallel and
//! still reproduce bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids used across the crate. Replicated experiments add the replica
/// index to the base id.
pub mod streams {
    pub const SIMULATE: u64 = 0;
    pub const KR_RESTART: u64 = 1 << 16;
    pub const WITNESS: u64 = 2 << 16;
    pub const OCCUPATION: u64 = 3 << 16;
    pub const ENTROPY: u64 = 4 << 16;
    pub const STABILITY: u64 = 5 << 16;
    pub const MINMAX: u64 = 6 << 16;
    pub const VERDICT: u64 = 7 << 16;
}

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Index drawn from unnormalized nonnegative weights; `None` if all weights vanish.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
        last = Some(i);
    }
    last
}

/// Uniform draw from the probability simplex of dimension `p`.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..p).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
