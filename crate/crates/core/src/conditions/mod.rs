//! Checkers and certificates for the sufficient conditions of unique
//! ergodicity: nondegeneracy (N), observability (O, and its uniform
//! version UO), subrectangularity (K), the rank-one condition (KR), and
//! Condition (C) witnesses built from (KR).

mod observability;
mod pattern;
mod rank_one;
mod report;
mod witness;

use std::time::Instant;

use serde_json::json;
use thiserror::Error;

pub use observability::check_o;
pub use pattern::SupportPattern;
pub use rank_one::{check_kr, KrParams, KrWitness};
pub use report::{Condition, ConditionReport, Evidence, NViolation, Status, WitnessSummary};
pub use witness::{check_c, condition_c_witness, ConditionCWitness};

use crate::filtering::{FilterError, ObsWord};
use crate::model::HmmModel;
use pattern::{search_subrectangular, PatternSearch};
use report::bounds;

pub const DEFAULT_MAX_PATTERNS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("empirical bound {verified_bound} exceeds epsilon {epsilon}")]
    BoundViolated { verified_bound: f64, epsilon: f64 },
    #[error("only {accepted} priors accepted after {attempts} draws")]
    SamplingFailed { accepted: usize, attempts: usize },
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Nondegeneracy: `M(y)_ij > 0` for every `y` wherever `P_ij > 0`.
pub fn check_n(model: &HmmModel) -> ConditionReport {
    let start = Instant::now();
    let p = model.num_states();
    let mut violations = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if model.transition().get(i, j) > 0.0 {
                for y in 0..model.num_obs() {
                    if model.obs_matrix(y).get(i, j) == 0.0 {
                        violations.push((i, j, y));
                    }
                }
            }
        }
    }
    let witness = violations.iter().find(|v| v.0 != v.1).or(violations.first()).map(|&(i, j, y)| NViolation {
        i,
        j,
        y,
        from_state: model.state_labels()[i].clone(),
        to_state: model.state_labels()[j].clone(),
        observation: model.obs_labels()[y].clone(),
    });
    let status = if witness.is_none() { Status::HoldsCertified } else { Status::FailsCertified };
    let evidence = Evidence::Nondegeneracy { witness, violations: violations.len() };
    ConditionReport::new(Condition::N, status, evidence, Default::default()).timed(start)
}

/// Subrectangularity: some product `M(y_1)⋯M(y_n)` is nonzero with
/// subrectangular support, and `P` is aperiodic. Decided exactly by
/// exploring the finite monoid of support patterns.
pub fn check_k(model: &HmmModel, max_patterns: usize) -> ConditionReport {
    let start = Instant::now();
    let period = model.validation_report().period;
    let b = bounds(&[("max_patterns", json!(max_patterns))]);
    let (status, evidence) = match search_subrectangular(model, max_patterns) {
        PatternSearch::Found { word, pattern, explored } => {
            let status = if period == 1 { Status::HoldsCertified } else { Status::FailsCertified };
            let word = ObsWord::from_trusted(word).labels(model);
            (status, Evidence::Subrectangular { word: Some(word), pattern: Some(pattern), reachable_patterns: explored, exhausted: false, period })
        }
        PatternSearch::Exhausted { explored } => (
            Status::FailsCertified,
            Evidence::Subrectangular { word: None, pattern: None, reachable_patterns: explored, exhausted: true, period },
        ),
        PatternSearch::Budget { explored } => (
            Status::Unknown,
            Evidence::Subrectangular { word: None, pattern: None, reachable_patterns: explored, exhausted: false, period },
        ),
    };
    ConditionReport::new(Condition::K, status, evidence, b).timed(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{fully_observed, parity, single_observation};

    #[test]
    fn n_examples() {
        let r = check_n(&parity());
        assert_eq!(r.status, Status::FailsCertified);
        let Evidence::Nondegeneracy { witness: Some(w), violations } = r.evidence else { panic!() };
        assert_eq!((w.i, w.j, w.y), (0, 1, 1));
        assert_eq!(violations, 4);
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_eq!(check_n(&single_observation(&p).unwrap()).status, Status::HoldsCertified);
    }

    #[test]
    fn k_examples() {
        let r = check_k(&parity(), 1000);
        assert_eq!(r.status, Status::FailsCertified);
        let Evidence::Subrectangular { reachable_patterns, exhausted, .. } = r.evidence else { panic!() };
        assert_eq!(reachable_patterns, 2);
        assert!(exhausted);

        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = check_k(&fully_observed(&p).unwrap(), 1000);
        assert_eq!(r.status, Status::HoldsCertified);
        let Evidence::Subrectangular { word: Some(word), .. } = r.evidence else { panic!() };
        assert_eq!(word, vec!["y0".to_string()]);
    }

    #[test]
    fn k_needs_aperiodicity() {
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = HmmModel::from_matrices(vec![
            Matrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap(),
            swap.add(&Matrix::from_rows(&[vec![0.0, -0.5], vec![0.0, 0.0]]).unwrap()),
        ])
        .unwrap();
        let r = check_k(&m, 1000);
        assert_eq!(r.status, Status::FailsCertified);
        let Evidence::Subrectangular { word: Some(_), period, .. } = r.evidence else { panic!() };
        assert_eq!(period, 2);
    }
}
