//! Experiments relating filter stability, occupation measures and the
//! invariant measures of the filter kernel, plus the aggregated verdict.

mod audit;
mod entropy;
mod occupation;
mod stability;
mod verdict;

use thiserror::Error;

pub use audit::{audit, AuditCheck, AuditReport};
pub use entropy::{entropy_rate, EntropyEstimate};
pub use occupation::{occupation_compare, OccupationComparison, OccupationParams};
pub use stability::{stability_curve, stability_diagnostic, StabilityCurve};
pub use verdict::{verdict, Certainty, ErgodicityVerdict, InvariantFinding, StabilitySummary, VerdictBudgets, VerdictStatus};

use crate::conditions::ConditionError;
use crate::filtering::FilterError;
use crate::simplex_kernel::KernelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("support violation: the first prior is not absolutely continuous with respect to the second")]
    SupportViolation,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contradictory certified evidence: {0}")]
    ContradictoryEvidence(String),
    #[error("certificate audit failed: {0}")]
    AuditFailed(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}
