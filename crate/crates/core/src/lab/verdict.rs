use serde::Serialize;

use super::audit::{audit, AuditReport};
use super::stability::stability_curve_on_stream;
use super::LabError;
use crate::conditions::{check_k, check_kr, check_n, check_o, ConditionReport, KrParams, Status, DEFAULT_MAX_PATTERNS};
use crate::model::{HmmModel, SimplexVector};
use crate::rng::streams;
use crate::simplex_kernel::{
    dirac_at, find_invariant, measure_distance, spread, AtomicMeasure, KernelConfig, MeasureDistance, SearchStatus,
};
use crate::tolerances::{ATOM_MERGE_TOL, INVARIANT_CERT_TOL, INVARIANT_SEPARATION_TOL, STABILITY_HORIZON, STABILITY_THRESHOLD};

/// Search and sampling budgets for [`verdict`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictBudgets {
    pub max_patterns: usize,
    /// Rank-one search; its seed is replaced by the verdict seed.
    pub kr: KrParams,
    pub invariant_steps: usize,
    pub atom_budget: usize,
    pub invariant_tol: f64,
    pub stability_horizon: usize,
    pub stability_threshold: f64,
    /// Curves `δ_x` vs `λ` are run for at most this many states `x`.
    pub stability_states: usize,
}

impl Default for VerdictBudgets {
    fn default() -> Self {
        VerdictBudgets {
            max_patterns: DEFAULT_MAX_PATTERNS,
            kr: KrParams::default(),
            invariant_steps: 200,
            atom_budget: 20_000,
            invariant_tol: INVARIANT_CERT_TOL,
            stability_horizon: STABILITY_HORIZON,
            stability_threshold: STABILITY_THRESHOLD,
            stability_states: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    UniquelyErgodic,
    NotUniquelyErgodic,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Certified,
    Numerical,
}

/// Outcome of an invariant-measure search from one starting measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantFinding {
    /// The starting measure: `dirac_at(stationary)` or `spread(stationary)`.
    pub start: &'static str,
    pub status: Option<SearchStatus>,
    pub measure: Option<AtomicMeasure>,
    pub residual: Option<f64>,
    pub steps: Option<usize>,
    pub period: Option<usize>,
    /// Fixed point with residual at most the certification tolerance.
    pub verified: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySummary {
    /// Curve between `δ_state` and the stationary law.
    pub state: usize,
    pub horizon: usize,
    pub final_gap: f64,
    pub decayed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEvidence {
    pub conditions: Vec<ConditionReport>,
    pub invariants: Vec<InvariantFinding>,
    pub invariant_distance: Option<MeasureDistance>,
    pub stability: Vec<StabilitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityVerdict {
    pub status: VerdictStatus,
    pub certainty: Option<Certainty>,
    /// Which line of evidence decided the status.
    pub route: Option<String>,
    pub period: usize,
    pub evidence: VerdictEvidence,
    pub caveats: Vec<String>,
    pub audit: Option<AuditReport>,
    pub seed: u64,
}

impl ErgodicityVerdict {
    pub fn is_certified(&self) -> bool {
        self.certainty == Some(Certainty::Certified)
    }

    pub fn condition(&self, c: crate::conditions::Condition) -> Option<&ConditionReport> {
        self.evidence.conditions.iter().find(|r| r.condition == c)
    }

    /// Drops wall-clock timings so that verdicts compare byte for byte.
    pub fn without_timing(mut self) -> Self {
        self.evidence.conditions = self.evidence.conditions.into_iter().map(ConditionReport::without_timing).collect();
        self
    }
}

fn search(model: &HmmModel, start: &'static str, measure: AtomicMeasure, budgets: &VerdictBudgets) -> InvariantFinding {
    let config = KernelConfig { merge_tol: ATOM_MERGE_TOL, atom_budget: budgets.atom_budget };
    match find_invariant(model, &measure, budgets.invariant_steps, budgets.invariant_tol, &config) {
        Ok(s) => {
            let verified = s.status != SearchStatus::BudgetExhausted && s.residual <= INVARIANT_CERT_TOL;
            InvariantFinding {
                start,
                status: Some(s.status),
                residual: Some(s.residual),
                steps: Some(s.steps),
                period: s.period,
                measure: Some(s.measure),
                verified,
                note: None,
            }
        }
        Err(e) => InvariantFinding {
            start,
            status: None,
            measure: None,
            residual: None,
            steps: None,
            period: None,
            verified: false,
            note: Some(e.to_string()),
        },
    }
}

/// Aggregates the condition checks, the invariant-measure search and, if
/// needed, stability experiments into one decision.
///
/// Certified routes, in order: nondegeneracy with an aperiodic signal,
/// observability, subrectangularity or an exact rank-one product, and two
/// distinct verified invariant measures. Certified evidence pointing both
/// ways is reported as [`LabError::ContradictoryEvidence`]; a certified
/// verdict whose certificates fail the audit is [`LabError::AuditFailed`].
pub fn verdict(model: &HmmModel, budgets: &VerdictBudgets, seed: u64) -> Result<ErgodicityVerdict, LabError> {
    let period = model.validation_report().period;
    let lambda = model.stationary();
    let kr_params = KrParams { seed, ..budgets.kr };

    let (conditions, invariants) = rayon::join(
        || {
            let ((n, o), (k, kr)) = rayon::join(
                || (check_n(model), check_o(model)),
                || rayon::join(|| check_k(model, budgets.max_patterns), || check_kr(model, &kr_params)),
            );
            vec![n, o, k, kr]
        },
        || {
            let (lo, hi) = rayon::join(
                || search(model, "dirac_at(stationary)", dirac_at(lambda), budgets),
                || search(model, "spread(stationary)", spread(lambda), budgets),
            );
            vec![lo, hi]
        },
    );
    let [n, o, k, kr] = [&conditions[0], &conditions[1], &conditions[2], &conditions[3]];

    let ue_route = if n.status == Status::HoldsCertified && period == 1 {
        Some("nondegenerate_aperiodic")
    } else if o.status == Status::HoldsCertified {
        Some("observable")
    } else if k.status == Status::HoldsCertified {
        Some("subrectangular")
    } else if kr.status == Status::HoldsCertified {
        Some("rank_one")
    } else {
        None
    };

    let invariant_distance = match (&invariants[0], &invariants[1]) {
        (InvariantFinding { verified: true, measure: Some(a), .. }, InvariantFinding { verified: true, measure: Some(b), .. }) => {
            Some(measure_distance(a, b))
        }
        _ => None,
    };
    let distinct = invariant_distance.is_some_and(|d| d.value > INVARIANT_SEPARATION_TOL);

    if let (Some(route), Status::FailsCertified) = (ue_route, kr.status) {
        return Err(LabError::ContradictoryEvidence(format!("route {route} certifies uniqueness but the rank-one condition is certified to fail")));
    }
    if let (Some(route), true) = (ue_route, distinct) {
        return Err(LabError::ContradictoryEvidence(format!(
            "route {route} certifies uniqueness but two verified invariant measures are {} apart",
            invariant_distance.unwrap().value
        )));
    }

    let mut caveats = Vec::new();
    if period > 1 {
        caveats.push(format!(
            "signal is periodic (period {period}): kernel iterates are claimed to converge only in the Cesàro sense, \
             n⁻¹ Σ M₀Πᵏ ⇒ M, not M₀Πⁿ ⇒ M"
        ));
    }

    let mut stability = Vec::new();
    let (status, certainty, route) = if let Some(route) = ue_route {
        (VerdictStatus::UniquelyErgodic, Some(Certainty::Certified), Some(route.to_string()))
    } else if distinct {
        caveats.push(
            "invariant measures are reported with their starting measures; they are not identified with the laws of the \
             minimal and maximal filters"
                .to_string(),
        );
        (VerdictStatus::NotUniquelyErgodic, Some(Certainty::Certified), Some("distinct_invariant_measures".to_string()))
    } else if kr.status == Status::Holds {
        let states = model.num_states().min(budgets.stability_states);
        for x in 0..states {
            let mu = SimplexVector::point_mass(model.num_states(), x);
            let curve = stability_curve_on_stream(model, &mu, lambda, budgets.stability_horizon, seed, streams::VERDICT + x as u64)?;
            let final_gap = curve.final_gap();
            stability.push(StabilitySummary {
                state: x,
                horizon: budgets.stability_horizon,
                final_gap,
                decayed: final_gap <= budgets.stability_threshold,
            });
        }
        if stability.iter().all(|s| s.decayed) {
            caveats.push(
                "numerical verdict: a floating-point rank-one product and finite-horizon stability curves, not a certificate"
                    .to_string(),
            );
            (VerdictStatus::UniquelyErgodic, Some(Certainty::Numerical), Some("rank_one_numerical".to_string()))
        } else {
            (VerdictStatus::Inconclusive, None, None)
        }
    } else {
        (VerdictStatus::Inconclusive, None, None)
    };

    let mut v = ErgodicityVerdict {
        status,
        certainty,
        route,
        period,
        evidence: VerdictEvidence { conditions, invariants, invariant_distance, stability },
        caveats,
        audit: None,
        seed,
    };
    if v.is_certified() {
        let report = audit(model, &v);
        if !report.passed {
            let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            return Err(LabError::AuditFailed(failed.join(", ")));
        }
        v.audit = Some(report);
    }
    Ok(v)
}
