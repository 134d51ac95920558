use serde::Serialize;
use serde_json::{Map, Value};

use super::{ConditionCWitness, KrWitness, SupportPattern};
use crate::model::HmmModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    N,
    O,
    UO,
    K,
    KR,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    Fails,
    HoldsCertified,
    FailsCertified,
    Unknown,
}

impl Status {
    pub fn holds(self) -> bool {
        matches!(self, Status::Holds | Status::HoldsCertified)
    }

    pub fn is_certified(self) -> bool {
        matches!(self, Status::HoldsCertified | Status::FailsCertified)
    }
}

/// A `(i, j, y)` with `P_ij > 0` but `M(y)_ij = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NViolation {
    pub i: usize,
    pub j: usize,
    pub y: usize,
    pub from_state: String,
    pub to_state: String,
    pub observation: String,
}

/// A witness word written with observation labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSummary {
    pub word: Vec<String>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub residual: f64,
    pub exact: bool,
    pub log_scale: f64,
}

impl WitnessSummary {
    pub fn new(model: &HmmModel, w: &KrWitness) -> Self {
        WitnessSummary {
            word: w.word.labels(model),
            u: w.u.clone(),
            rho: w.rho.as_slice().to_vec(),
            residual: w.residual,
            exact: w.exact,
            log_scale: w.log_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Nondegeneracy {
        /// First violation, preferring off-diagonal transitions.
        witness: Option<NViolation>,
        violations: usize,
    },
    Observability {
        dimension: usize,
        /// Generators `M(y_1)⋯M(y_k)1` spanning the observable subspace.
        generators: Vec<Vec<f64>>,
        generator_words: Vec<Vec<String>>,
        /// A zero-sum direction orthogonal to every generator.
        indistinguishable: Option<Vec<f64>>,
        uniformly_observable: bool,
    },
    Subrectangular {
        word: Option<Vec<String>>,
        pattern: Option<SupportPattern>,
        reachable_patterns: usize,
        exhausted: bool,
        period: usize,
    },
    RankOne {
        witness: Option<WitnessSummary>,
        via_condition_k: bool,
        /// Size of the product set when it closed under extension.
        closed_products: Option<usize>,
        min_ratio: f64,
        ratio_lower_bound: Option<f64>,
        products_explored: usize,
        restarts: usize,
        max_len: usize,
    },
    ConditionC(ConditionCWitness),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub status: Status,
    pub evidence: Evidence,
    pub bounds: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
    /// The in-memory witness behind a (KR) report.
    #[serde(skip)]
    pub kr_witness: Option<KrWitness>,
}

impl ConditionReport {
    pub(crate) fn new(condition: Condition, status: Status, evidence: Evidence, bounds: Map<String, Value>) -> Self {
        ConditionReport { condition, status, evidence, bounds, elapsed_ms: None, kr_witness: None }
    }

    pub(crate) fn timed(mut self, start: std::time::Instant) -> Self {
        self.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        self
    }

    /// Drops wall-clock timings so that reports compare byte for byte.
    pub fn without_timing(mut self) -> Self {
        self.elapsed_ms = None;
        self
    }
}

pub(crate) fn bounds(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}
