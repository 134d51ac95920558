use serde::Serialize;

use super::LabError;
use crate::filtering::{gaps_to_csv, simulate_stream, step_at};
use crate::linalg;
use crate::model::{HmmModel, SimplexVector};
use crate::rng::streams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCurve {
    pub priors: (SimplexVector, SimplexVector),
    /// Law of the initial state of the simulated path.
    pub simulating_law: SimplexVector,
    /// `‖π_n^μ − π_n^ν‖` for `n = 1..=horizon`.
    pub gaps: Vec<f64>,
    pub seed: u64,
}

impl StabilityCurve {
    pub fn final_gap(&self) -> f64 {
        *self.gaps.last().expect("horizon ≥ 1")
    }

    /// CSV with columns `n, gap`.
    pub fn to_csv(&self) -> String {
        gaps_to_csv("n", "gap", 1, &self.gaps)
    }
}

/// Gap between the filters started at `mu` and `nu` along one path whose
/// signal starts from `mu`. Requires `mu ≪ nu`.
pub fn stability_curve(model: &HmmModel, mu: &SimplexVector, nu: &SimplexVector, horizon: usize, seed: u64) -> Result<StabilityCurve, LabError> {
    if !mu.is_dominated_by(nu) {
        return Err(LabError::SupportViolation);
    }
    run(model, mu, nu, mu, horizon, seed, streams::STABILITY)
}

pub(crate) fn stability_curve_on_stream(
    model: &HmmModel,
    mu: &SimplexVector,
    nu: &SimplexVector,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> Result<StabilityCurve, LabError> {
    if !mu.is_dominated_by(nu) {
        return Err(LabError::SupportViolation);
    }
    run(model, mu, nu, mu, horizon, seed, stream)
}

/// Like [`stability_curve`] but with the path simulated from `law` and no
/// absolute-continuity requirement between the two filter priors.
pub fn stability_diagnostic(
    model: &HmmModel,
    mu: &SimplexVector,
    nu: &SimplexVector,
    law: &SimplexVector,
    horizon: usize,
    seed: u64,
) -> Result<StabilityCurve, LabError> {
    run(model, mu, nu, law, horizon, seed, streams::STABILITY)
}

fn run(
    model: &HmmModel,
    mu: &SimplexVector,
    nu: &SimplexVector,
    law: &SimplexVector,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> Result<StabilityCurve, LabError> {
    let p = model.num_states();
    for v in [mu, nu, law] {
        if v.dim() != p {
            return Err(crate::filtering::FilterError::DimensionMismatch { expected: p, found: v.dim() }.into());
        }
    }
    if horizon == 0 {
        return Err(LabError::InvalidArgument("horizon must be at least 1".into()));
    }
    let path = simulate_stream(model, law, horizon, seed, stream);
    let mut a = mu.clone();
    let mut b = nu.clone();
    let mut gaps = Vec::with_capacity(horizon);
    for (k, &y) in path.y.iter().enumerate() {
        a = step_at(model, &a, y, k + 1)?.0;
        b = step_at(model, &b, y, k + 1)?.0;
        gaps.push(linalg::l1_distance(&a, &b));
    }
    Ok(StabilityCurve { priors: (mu.clone(), nu.clone()), simulating_law: law.clone(), gaps, seed })
}
