//! The filter recursion `π_k = π_{k−1} M(y_k) / π_{k−1} M(y_k) 1`, path
//! simulation, rescaled matrix products and the min/max filter gap.

mod export;
mod minmax;
mod scaled;
mod simulate;

use thiserror::Error;

pub use export::{gaps_to_csv, trace_to_csv};
pub use minmax::minmax_gap;
pub use scaled::{product_normalized, ScaledMatrix};
pub use simulate::{simulate, simulate_stream, PathSample, PathSampler};

use crate::linalg;
use crate::model::{HmmModel, ModelError, SimplexVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    /// `π M(y) 1 = 0`: the observation is impossible under the current filter.
    #[error("observation at step {step} has zero likelihood under the filter")]
    ZeroLikelihood { step: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("observation symbol {symbol} out of range (q = {q})")]
    SymbolOutOfRange { symbol: usize, q: usize },
    #[error("matrix product is identically zero")]
    ZeroProduct,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A finite sequence of observation-symbol indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct ObsWord(Vec<usize>);

impl ObsWord {
    /// Checks every symbol against the model's alphabet.
    pub fn new(model: &HmmModel, symbols: Vec<usize>) -> Result<Self, FilterError> {
        let q = model.num_obs();
        if let Some(&symbol) = symbols.iter().find(|&&s| s >= q) {
            return Err(FilterError::SymbolOutOfRange { symbol, q });
        }
        Ok(ObsWord(symbols))
    }

    pub(crate) fn from_trusted(symbols: Vec<usize>) -> Self {
        ObsWord(symbols)
    }

    /// Parses a comma-separated list of observation labels. The empty string
    /// is the empty word.
    pub fn parse_labels(model: &HmmModel, text: &str) -> Result<Self, ModelError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(ObsWord::default());
        }
        text.split(',')
            .map(|l| model.obs_index(l.trim()).ok_or_else(|| ModelError::UnknownObservation(l.trim().into())))
            .collect::<Result<Vec<_>, _>>()
            .map(ObsWord)
    }

    pub fn from_labels<S: AsRef<str>>(model: &HmmModel, labels: &[S]) -> Result<Self, ModelError> {
        labels
            .iter()
            .map(|l| model.obs_index(l.as_ref()).ok_or_else(|| ModelError::UnknownObservation(l.as_ref().into())))
            .collect::<Result<Vec<_>, _>>()
            .map(ObsWord)
    }

    pub fn labels(&self, model: &HmmModel) -> Vec<String> {
        self.0.iter().map(|&y| model.obs_labels()[y].clone()).collect()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Posteriors `π_0 … π_n` of one filter run together with the one-step
/// predictive log-likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub posteriors: Vec<SimplexVector>,
    /// `log_increments[k−1] = ln π_{k−1} M(y_k) 1`.
    pub log_increments: Vec<f64>,
    /// `ln μ M(y_1)⋯M(y_n) 1`, the sum of the increments.
    pub log_likelihood: f64,
}

impl FilterTrace {
    pub fn last(&self) -> &SimplexVector {
        self.posteriors.last().expect("trace holds the prior")
    }
}

fn check_dim(model: &HmmModel, v: &SimplexVector) -> Result<(), FilterError> {
    if v.dim() != model.num_states() {
        return Err(FilterError::DimensionMismatch { expected: model.num_states(), found: v.dim() });
    }
    Ok(())
}

/// Unnormalized one-step update and its mass, `(π M(y), π M(y) 1)`.
pub(crate) fn predict(model: &HmmModel, prior: &[f64], y: usize) -> (Vec<f64>, f64) {
    let v = model.obs_matrix(y).left_mul(prior);
    let mass = v.iter().sum();
    (v, mass)
}

pub(crate) fn step_at(model: &HmmModel, prior: &[f64], y: usize, step: usize) -> Result<(SimplexVector, f64), FilterError> {
    let (v, mass) = predict(model, prior, y);
    if !(mass > 0.0) {
        return Err(FilterError::ZeroLikelihood { step });
    }
    let post = SimplexVector::from_unnormalized(v).ok_or(FilterError::ZeroLikelihood { step })?;
    Ok((post, mass.ln()))
}

/// One filter update. Returns the posterior and `ln(prior · M(y) · 1)`.
pub fn filter_step(model: &HmmModel, prior: &SimplexVector, y: usize) -> Result<(SimplexVector, f64), FilterError> {
    check_dim(model, prior)?;
    if y >= model.num_obs() {
        return Err(FilterError::SymbolOutOfRange { symbol: y, q: model.num_obs() });
    }
    step_at(model, prior, y, 1)
}

/// Runs the filter from `prior` along `word`.
pub fn filter_path(model: &HmmModel, prior: &SimplexVector, word: &ObsWord) -> Result<FilterTrace, FilterError> {
    check_dim(model, prior)?;
    let mut posteriors = Vec::with_capacity(word.len() + 1);
    let mut log_increments = Vec::with_capacity(word.len());
    posteriors.push(prior.clone());
    for (k, &y) in word.symbols().iter().enumerate() {
        if y >= model.num_obs() {
            return Err(FilterError::SymbolOutOfRange { symbol: y, q: model.num_obs() });
        }
        let (post, inc) = step_at(model, posteriors.last().unwrap(), y, k + 1)?;
        posteriors.push(post);
        log_increments.push(inc);
    }
    let log_likelihood = log_increments.iter().sum();
    Ok(FilterTrace { posteriors, log_increments, log_likelihood })
}

/// Final posterior only, without keeping the trace.
pub fn filter_final(model: &HmmModel, prior: &[f64], symbols: &[usize]) -> Result<SimplexVector, FilterError> {
    let mut pi = SimplexVector::from_unnormalized(prior.to_vec()).ok_or(FilterError::ZeroLikelihood { step: 0 })?;
    for (k, &y) in symbols.iter().enumerate() {
        pi = step_at(model, &pi, y, k + 1)?.0;
    }
    Ok(pi)
}

/// `Σ_i |a_i − b_i|`, with range `[0, 2]`.
pub fn tv_distance(a: &SimplexVector, b: &SimplexVector) -> Result<f64, FilterError> {
    if a.dim() != b.dim() {
        return Err(FilterError::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(linalg::l1_distance(a, b))
}
