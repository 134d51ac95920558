//! Finite hidden Markov models given by observation matrices `M(y)`.
//!
//! The signal transition matrix is `P = Σ_y M(y)`; a model is accepted only
//! when `P` is row-stochastic and irreducible, in which case its stationary
//! law `λ` is computed once at construction.

mod builtin;
mod chain;
pub mod random;
mod simplex;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{fully_observed, parity, single_observation};
pub use chain::{is_irreducible, period, stationary_distribution};
pub use simplex::SimplexVector;

use crate::linalg::Matrix;
use crate::tolerances::{STATIONARY_TOL, SUM_TOL};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model file: {0}")]
    Parse(String),
    #[error("model failed validation: {}", summarize(.0))]
    Validation(ValidationReport),
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("stationary distribution did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid probability vector: {0}")]
    InvalidSimplex(String),
    #[error("unknown observation label `{0}`")]
    UnknownObservation(String),
}

fn summarize(report: &ValidationReport) -> String {
    report.violations.iter().map(|v| format!("[{}] {}", v.rule, v.message)).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
}

/// Outcome of [`validate`]: every broken invariant, plus the period of the
/// support digraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub period: usize,
    pub aperiodic: bool,
}

/// Labels and observation matrices before any invariant has been checked.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub states: Vec<String>,
    pub observations: Vec<String>,
    pub matrices: Vec<Matrix>,
}

/// Lists every violated model invariant. Never fails; the period is that of
/// the support digraph of `Σ_y M(y)` through state 0.
pub fn validate(raw: &RawModel) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |rule: &'static str, message: String| violations.push(Violation { rule, message });
    let p = raw.states.len();
    let q = raw.observations.len();

    if p == 0 {
        push("nonempty-states", "no states declared".into());
    }
    if q == 0 {
        push("nonempty-observations", "no observation symbols declared".into());
    }
    if raw.states.iter().collect::<HashSet<_>>().len() != p {
        push("unique-state-labels", "state labels repeat".into());
    }
    if raw.observations.iter().collect::<HashSet<_>>().len() != q {
        push("unique-observation-labels", "observation labels repeat".into());
    }
    if raw.matrices.len() != q {
        push("observation-keys", format!("{} matrices for {} observation symbols", raw.matrices.len(), q));
    }
    let shapes_ok = raw.matrices.iter().enumerate().fold(true, |ok, (y, m)| {
        if m.rows() != p || m.cols() != p {
            push(
                "matrix-shape",
                format!("M({}) is {}x{}, expected {p}x{p}", label(raw, y), m.rows(), m.cols()),
            );
            false
        } else {
            ok
        }
    });

    let mut period = 1;
    if shapes_ok && p > 0 && q > 0 && raw.matrices.len() == q {
        let mut finite = true;
        for (y, m) in raw.matrices.iter().enumerate() {
            if let Some((i, j)) = find_entry(m, |x| !x.is_finite()) {
                push("finite-entries", format!("M({})[{i}][{j}] is not finite", label(raw, y)));
                finite = false;
            }
            if let Some((i, j)) = find_entry(m, |x| x < 0.0) {
                push(
                    "nonnegative-entries",
                    format!("M({})[{i}][{j}] = {} is negative", label(raw, y), m.get(i, j)),
                );
            }
        }
        if finite {
            let transition = sum_matrices(&raw.matrices);
            for (i, s) in transition.row_sums().into_iter().enumerate() {
                if (s - 1.0).abs() > SUM_TOL {
                    push("row-stochastic", format!("row {i} of P sums to {s}"));
                }
            }
            if !chain::is_irreducible(&transition) {
                push("irreducible", "the transition matrix P is not irreducible".into());
            }
            period = chain::class_period(&transition).max(1);
        }
    }

    ValidationReport { ok: violations.is_empty(), violations, period, aperiodic: period == 1 }
}

fn label(raw: &RawModel, y: usize) -> &str {
    raw.observations.get(y).map_or("?", String::as_str)
}

fn find_entry(m: &Matrix, pred: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).find(|&(i, j)| pred(m.get(i, j)))
}

fn sum_matrices(ms: &[Matrix]) -> Matrix {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.add(m))
}

/// A validated finite hidden Markov model. Immutable after construction.
#[derive(Debug, Clone)]
pub struct HmmModel {
    state_labels: Vec<String>,
    obs_labels: Vec<String>,
    obs_matrices: Vec<Matrix>,
    transition: Matrix,
    stationary: SimplexVector,
}

impl HmmModel {
    pub fn new(raw: RawModel) -> Result<Self, ModelError> {
        let report = validate(&raw);
        if !report.ok {
            return Err(ModelError::Validation(report));
        }
        let transition = sum_matrices(&raw.matrices);
        let stationary = chain::stationary_distribution(&transition, STATIONARY_TOL)?;
        Ok(HmmModel {
            state_labels: raw.states,
            obs_labels: raw.observations,
            obs_matrices: raw.matrices,
            transition,
            stationary,
        })
    }

    /// Builds a model with generated labels `s0..` and `y0..`.
    pub fn from_matrices(matrices: Vec<Matrix>) -> Result<Self, ModelError> {
        let p = matrices.first().map_or(0, Matrix::rows);
        Self::new(RawModel {
            states: (0..p).map(|i| format!("s{i}")).collect(),
            observations: (0..matrices.len()).map(|y| format!("y{y}")).collect(),
            matrices,
        })
    }

    pub fn num_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn num_obs(&self) -> usize {
        self.obs_labels.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn obs_labels(&self) -> &[String] {
        &self.obs_labels
    }

    pub fn obs_matrix(&self, y: usize) -> &Matrix {
        &self.obs_matrices[y]
    }

    pub fn obs_matrices(&self) -> &[Matrix] {
        &self.obs_matrices
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn stationary(&self) -> &SimplexVector {
        &self.stationary
    }

    pub fn obs_index(&self, label: &str) -> Option<usize> {
        self.obs_labels.iter().position(|l| l == label)
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            states: self.state_labels.clone(),
            observations: self.obs_labels.clone(),
            matrices: self.obs_matrices.clone(),
        }
    }

    /// Re-runs [`validate`] on the model's parts.
    pub fn validation_report(&self) -> ValidationReport {
        validate(&self.to_raw())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            states: self.state_labels.clone(),
            observations: self.obs_labels.clone(),
            m: self
                .obs_labels
                .iter()
                .cloned()
                .zip(self.obs_matrices.iter().map(Matrix::to_rows))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Vec<String>,
    observations: Vec<String>,
    #[serde(rename = "M")]
    m: BTreeMap<String, Vec<Vec<f64>>>,
}

/// Parses the JSON model format and validates it.
///
/// ```json
/// { "states": ["a", "b"], "observations": ["0", "1"],
///   "M": { "0": [[0, 0.5], [0.5, 0]], "1": [[0.5, 0], [0, 0.5]] } }
/// ```
pub fn load_model(source: &str) -> Result<HmmModel, ModelError> {
    let raw = parse_model(source)?;
    HmmModel::new(raw)
}

/// Parses without checking model invariants (for `validate`).
pub fn parse_model(source: &str) -> Result<RawModel, ModelError> {
    let file: ModelFile = serde_json::from_str(source).map_err(|e| ModelError::Parse(e.to_string()))?;
    let declared: HashSet<&String> = file.observations.iter().collect();
    let mut missing = Vec::new();
    let mut matrices = Vec::with_capacity(file.observations.len());
    for y in &file.observations {
        match file.m.get(y) {
            Some(rows) => match Matrix::from_rows(rows) {
                Some(m) => matrices.push(m),
                None => return Err(ModelError::Parse(format!("M[\"{y}\"] has rows of unequal length"))),
            },
            None => missing.push(y.clone()),
        }
    }
    let extra: Vec<&String> = file.m.keys().filter(|k| !declared.contains(k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let report = ValidationReport {
            ok: false,
            violations: vec![Violation {
                rule: "observation-keys",
                message: format!("M keys do not match observations (missing {missing:?}, undeclared {extra:?})"),
            }],
            period: 1,
            aperiodic: true,
        };
        return Err(ModelError::Validation(report));
    }
    Ok(RawModel { states: file.states, observations: file.observations, matrices })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARITY: &str = r#"{
        "states": ["0", "1"],
        "observations": ["0", "1"],
        "M": { "0": [[0, 0.5], [0.5, 0]], "1": [[0.5, 0], [0, 0.5]] }
    }"#;

    #[test]
    fn loads_parity_model() {
        let m = load_model(PARITY).unwrap();
        assert_eq!(m.num_states(), 2);
        assert_eq!(m.num_obs(), 2);
        assert_eq!(m.transition().to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(m.stationary().as_slice(), &[0.5, 0.5]);
        let r = m.validation_report();
        assert!(r.ok);
        assert_eq!(r.period, 1);
    }

    #[test]
    fn negative_entry_is_a_validation_error() {
        let src = PARITY.replace("[[0, 0.5], [0.5, 0]]", "[[-0.1, 0.6], [0.5, 0]]");
        match load_model(&src) {
            Err(ModelError::Validation(r)) => {
                assert!(!r.ok);
                assert!(r.violations.iter().any(|v| v.rule == "nonnegative-entries"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(load_model("{"), Err(ModelError::Parse(_))));
        let extra = PARITY.replace("\"states\"", "\"extra\": 1, \"states\"");
        assert!(matches!(load_model(&extra), Err(ModelError::Parse(_))));
        let nan = PARITY.replace("0.5, 0]]", "NaN, 0]]");
        assert!(matches!(load_model(&nan), Err(ModelError::Parse(_))));
    }

    #[test]
    fn key_mismatch_is_reported() {
        let src = PARITY.replace("\"1\": [[0.5", "\"2\": [[0.5");
        match load_model(&src) {
            Err(ModelError::Validation(r)) => assert_eq!(r.violations[0].rule, "observation-keys"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn row_sum_violation() {
        let src = PARITY.replace("[[0.5, 0], [0, 0.5]]", "[[0.5, 0], [0, 0.6]]");
        let raw = parse_model(&src).unwrap();
        let r = validate(&raw);
        assert!(r.violations.iter().any(|v| v.rule == "row-stochastic"));
    }

    #[test]
    fn swap_is_valid_with_period_two() {
        let raw = RawModel {
            states: vec!["a".into(), "b".into()],
            observations: vec!["y".into()],
            matrices: vec![Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()],
        };
        let r = validate(&raw);
        assert!(r.ok);
        assert_eq!(r.period, 2);
        assert!(!r.aperiodic);
    }

    #[test]
    fn reducible_chain_is_flagged() {
        let raw = RawModel {
            states: vec!["a".into(), "b".into()],
            observations: vec!["y".into()],
            matrices: vec![Matrix::identity(2)],
        };
        let r = validate(&raw);
        assert!(!r.ok);
        assert!(r.violations.iter().any(|v| v.rule == "irreducible"));
    }

    #[test]
    fn validate_is_idempotent() {
        let raw = parse_model(PARITY).unwrap();
        assert_eq!(validate(&raw), validate(&raw));
    }

    #[test]
    fn json_round_trip() {
        let m = load_model(PARITY).unwrap();
        let again = load_model(&m.to_json()).unwrap();
        assert_eq!(again.obs_matrices(), m.obs_matrices());
        assert_eq!(again.obs_labels(), m.obs_labels());
    }
}
