use rand::Rng;

use crate::model::{HmmModel, SimplexVector};
use crate::rng::{self, streams, StreamRng};

/// One simulated signal/observation path: `x[0..=n]`, `y[0..n]` where
/// `y[k−1]` is the observation emitted on the transition `x[k−1] → x[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub seed: u64,
}

/// Per-state cumulative tables over the joint outcome `(y, next state)`.
#[derive(Debug, Clone)]
pub struct PathSampler {
    p: usize,
    cumulative: Vec<Vec<f64>>,
}

impl PathSampler {
    pub fn new(model: &HmmModel) -> Self {
        let p = model.num_states();
        let cumulative = (0..p)
            .map(|i| {
                let mut acc = 0.0;
                model
                    .obs_matrices()
                    .iter()
                    .flat_map(|m| m.row(i).iter().copied())
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect()
            })
            .collect();
        PathSampler { p, cumulative }
    }

    /// Draws `(y, next state)` from row `from`.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, from: usize) -> (usize, usize) {
        let table = &self.cumulative[from];
        let total = *table.last().unwrap();
        let u = rng.gen::<f64>() * total;
        // First index whose cumulative weight exceeds u; it always carries
        // positive weight.
        let mut idx = table.partition_point(|&c| c <= u);
        if idx == table.len() {
            idx = table.iter().rposition(|&c| c < total).map_or(0, |i| i + 1);
        }
        (idx / self.p, idx % self.p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, initial: &SimplexVector, n: usize) -> (Vec<usize>, Vec<usize>) {
        let mut x = Vec::with_capacity(n + 1);
        let mut y = Vec::with_capacity(n);
        x.push(rng::sample_index(rng, initial).expect("initial law has mass"));
        for _ in 0..n {
            let (obs, next) = self.step(rng, *x.last().unwrap());
            y.push(obs);
            x.push(next);
        }
        (x, y)
    }
}

/// Simulates `n` steps with `x_0 ~ initial`. Deterministic given `seed`, and
/// prefix-consistent: a longer run with the same seed extends a shorter one.
pub fn simulate(model: &HmmModel, initial: &SimplexVector, n: usize, seed: u64) -> PathSample {
    simulate_stream(model, initial, n, seed, streams::SIMULATE)
}

/// As [`simulate`], on an explicit RNG stream.
pub fn simulate_stream(model: &HmmModel, initial: &SimplexVector, n: usize, seed: u64, stream_id: u64) -> PathSample {
    let mut r: StreamRng = rng::stream(seed, stream_id);
    let (x, y) = PathSampler::new(model).sample(&mut r, initial, n);
    PathSample { x, y, seed }
}
