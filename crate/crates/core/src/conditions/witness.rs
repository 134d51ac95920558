use rayon::prelude::*;
use serde::Serialize;

use serde_json::json;

use super::report::{bounds, Condition, ConditionReport, Evidence, Status};
use super::{ConditionError, KrWitness};
use crate::filtering::{filter_final, tv_distance};
use crate::linalg;
use crate::model::HmmModel;
use crate::rng::{self, streams};

/// Rejection attempts allowed per requested sample.
const MAX_REJECTIONS: usize = 10_000;

/// Observation word and prior set on which filters from any two priors
/// merge to within `epsilon`, built from a rank-one witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCWitness {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub word: Vec<String>,
    /// `S = {μ : μ·u > alpha}`.
    pub u: Vec<f64>,
    pub alpha: f64,
    /// `‖A − u·ρ‖` for the normalized product `A` of the word.
    pub delta: f64,
    /// The a priori bound `4·delta/alpha`.
    pub bound: f64,
    pub samples: usize,
    /// Largest `‖π^μ − π^ν‖` after the word over the sampled pairs.
    pub verified_bound: f64,
}

/// With `α = λ·u/2` and `S = {μ : μ·u > α}`, any `μ, ν ∈ S` satisfy
/// `‖π^μ_N − π^ν_N‖ ≤ 4δ/α` after the witness word. Requires that bound to
/// be at most `epsilon`, then samples `samples` pairs from `S` uniformly and
/// checks the gap empirically.
pub fn condition_c_witness(
    model: &HmmModel,
    witness: &KrWitness,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<ConditionCWitness, ConditionError> {
    if witness.word.is_empty() {
        return Err(ConditionError::PreconditionFailed("witness word is empty".into()));
    }
    let alpha = linalg::dot(model.stationary(), &witness.u) / 2.0;
    let delta = witness.approximation_error;
    let bound = 4.0 * delta / alpha;
    if !(alpha > 0.0) || !(bound <= epsilon) {
        return Err(ConditionError::PreconditionFailed(format!(
            "4·delta/alpha = {bound:e} exceeds epsilon = {epsilon} (delta = {delta:e}, alpha = {alpha})"
        )));
    }

    let p = model.num_states();
    let mut rng = rng::stream(seed, streams::WITNESS);
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(2 * samples);
    let mut attempts = 0usize;
    while draws.len() < 2 * samples {
        attempts += 1;
        if attempts > MAX_REJECTIONS * 2 * samples.max(1) {
            return Err(ConditionError::SamplingFailed { accepted: draws.len(), attempts });
        }
        let mu = rng::uniform_simplex(&mut rng, p);
        if linalg::dot(&mu, &witness.u) > alpha {
            draws.push(mu);
        }
    }

    let word = witness.word.symbols();
    let gaps: Vec<f64> = draws
        .par_chunks(2)
        .map(|pair| -> Result<f64, ConditionError> {
            let a = filter_final(model, &pair[0], word)?;
            let b = filter_final(model, &pair[1], word)?;
            Ok(tv_distance(&a, &b)?)
        })
        .collect::<Result<_, _>>()?;
    let verified_bound = gaps.iter().copied().fold(0.0, f64::max);
    if verified_bound > epsilon {
        return Err(ConditionError::BoundViolated { verified_bound, epsilon });
    }
    Ok(ConditionCWitness {
        epsilon,
        n: witness.word.len(),
        word: witness.word.labels(model),
        u: witness.u.clone(),
        alpha,
        delta,
        bound,
        samples,
        verified_bound,
    })
}

/// Wraps [`condition_c_witness`] in a report. The status is certified only
/// when the witness product is exactly rank one, so that `delta = 0`.
pub fn check_c(model: &HmmModel, witness: &KrWitness, epsilon: f64, samples: usize, seed: u64) -> Result<ConditionReport, ConditionError> {
    let start = std::time::Instant::now();
    let c = condition_c_witness(model, witness, epsilon, samples, seed)?;
    let status = if witness.residual == 0.0 && c.delta == 0.0 { Status::HoldsCertified } else { Status::Holds };
    let bounds = bounds(&[("epsilon", json!(epsilon)), ("samples", json!(samples)), ("seed", json!(seed))]);
    Ok(ConditionReport::new(Condition::C, status, Evidence::ConditionC(c), bounds).timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtering::ObsWord;
    use crate::linalg::Matrix;
    use crate::model::{fully_observed, parity};

    #[test]
    fn fully_observed_collapses_exactly() {
        let m = fully_observed(&Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()).unwrap();
        let w = KrWitness::from_word(&m, &ObsWord::new(&m, vec![0]).unwrap()).unwrap();
        let c = condition_c_witness(&m, &w, 0.1, 1000, 0).unwrap();
        assert_eq!(c.verified_bound, 0.0);
        let r = check_c(&m, &w, 0.1, 100, 0).unwrap();
        assert_eq!(r.status, Status::HoldsCertified);
        assert_eq!(c.n, 1);
        assert_eq!(c.word, vec!["y0".to_string()]);
        assert!(c.alpha > 0.0);
    }

    #[test]
    fn loose_witness_is_rejected() {
        let m = parity();
        let w = KrWitness::from_word(&m, &ObsWord::new(&m, vec![1]).unwrap()).unwrap();
        assert!(matches!(condition_c_witness(&m, &w, 0.1, 10, 0), Err(ConditionError::PreconditionFailed(_))));
    }
}
