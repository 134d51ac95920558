use serde::Serialize;

use super::LabError;
use crate::filtering::{gaps_to_csv, simulate_stream, step_at};
use crate::model::HmmModel;
use crate::rng::streams;

const BATCHES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    /// Nats per observation.
    pub estimate: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Running average after each observation.
    pub running: Vec<f64>,
}

impl EntropyEstimate {
    /// CSV with columns `n, running_entropy`.
    pub fn to_csv(&self) -> String {
        gaps_to_csv("n", "running_entropy", 1, &self.running)
    }
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Ergodic average of the predictive surprisal `−ln(π_{k−1} M(Y_k) 1)`
/// along a stationary path, i.e. `−(1/n) ln λM(Y_1)⋯M(Y_n)1`.
pub fn entropy_rate(model: &HmmModel, horizon: usize, seed: u64) -> Result<EntropyEstimate, LabError> {
    if horizon == 0 {
        return Err(LabError::InvalidArgument("horizon must be at least 1".into()));
    }
    let path = simulate_stream(model, model.stationary(), horizon, seed, streams::ENTROPY);
    let mut pi = model.stationary().clone();
    let mut surprisal = Vec::with_capacity(horizon);
    let mut running = Vec::with_capacity(horizon);
    let mut total = Compensated::default();
    for (k, &y) in path.y.iter().enumerate() {
        let (post, log_mass) = step_at(model, &pi, y, k + 1)?;
        // A predictive probability cannot exceed one; larger masses are rounding.
        let s = (-log_mass).max(0.0);
        total.add(s);
        surprisal.push(s);
        running.push(total.value() / (k + 1) as f64);
        pi = post;
    }
    let estimate = *running.last().unwrap();
    Ok(EntropyEstimate { estimate, stderr: batch_stderr(&surprisal), horizon, seed, running })
}

fn batch_stderr(xs: &[f64]) -> f64 {
    let batches = BATCHES.min(xs.len());
    if batches < 2 {
        return 0.0;
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{parity, single_observation};

    #[test]
    fn parity_rate_is_ln2() {
        let e = entropy_rate(&parity(), 20_000, 0).unwrap();
        assert!((e.estimate - std::f64::consts::LN_2).abs() <= 1e-12);
        assert!(e.stderr < 1e-15);
        assert_eq!(e.running.len(), 20_000);
    }

    #[test]
    fn single_observation_rate_is_zero() {
        let m = single_observation(&Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()).unwrap();
        let e = entropy_rate(&m, 1000, 0).unwrap();
        assert!(e.estimate >= 0.0 && e.estimate < 1e-15);
    }

    #[test]
    fn compensated_sum_of_constants() {
        let mut c = Compensated::default();
        for _ in 0..100_000 {
            c.add(std::f64::consts::LN_2);
        }
        assert!((c.value() / 100_000.0 - std::f64::consts::LN_2).abs() <= 1e-15);
    }
}
