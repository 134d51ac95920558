use rayon::prelude::*;
use serde::Serialize;

use super::LabError;
use crate::filtering::{step_at, PathSampler};
use crate::model::HmmModel;
use crate::rng::{self, streams};
use crate::simplex_kernel::AtomicMeasure;
use crate::tolerances::{OCCUPATION_BURNIN, OCCUPATION_HORIZON};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationParams {
    pub horizon: usize,
    pub burnin: usize,
    /// Independent filter paths averaged per measure.
    pub replicas: usize,
}

impl Default for OccupationParams {
    fn default() -> Self {
        OccupationParams { horizon: OCCUPATION_HORIZON, burnin: OCCUPATION_BURNIN, replicas: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationComparison {
    /// Max absolute difference over all moments of degree ≤ 2.
    pub moment_gap: f64,
    /// Index into the moment vector where the gap is attained.
    pub worst_moment: usize,
    /// `E[x_i]` for each `i`, then `E[x_i x_j]` for `i ≤ j`.
    pub moments_a: Vec<f64>,
    pub moments_b: Vec<f64>,
    pub params: OccupationParams,
    pub seed: u64,
}

/// Estimates the Cesàro averages of `a·Π^k` and `b·Π^k` over
/// `k = burnin+1..=horizon` by running filters from priors drawn from each
/// measure, and compares their moments. Replica `r` uses the same random
/// stream for both measures.
pub fn occupation_compare(
    model: &HmmModel,
    a: &AtomicMeasure,
    b: &AtomicMeasure,
    params: &OccupationParams,
    seed: u64,
) -> Result<OccupationComparison, LabError> {
    if params.horizon <= params.burnin {
        return Err(LabError::InvalidArgument("horizon must exceed burn-in".into()));
    }
    if params.replicas == 0 {
        return Err(LabError::InvalidArgument("at least one replica is required".into()));
    }
    let moments_a = occupation_moments(model, a, params, seed)?;
    let moments_b = occupation_moments(model, b, params, seed)?;
    let (worst_moment, moment_gap) = moments_a
        .iter()
        .zip(&moments_b)
        .map(|(x, y)| (x - y).abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Ok(OccupationComparison { moment_gap, worst_moment, moments_a, moments_b, params: *params, seed })
}

fn occupation_moments(model: &HmmModel, m: &AtomicMeasure, params: &OccupationParams, seed: u64) -> Result<Vec<f64>, LabError> {
    let p = model.num_states();
    if m.dim() != p {
        return Err(crate::filtering::FilterError::DimensionMismatch { expected: p, found: m.dim() }.into());
    }
    let sampler = PathSampler::new(model);
    let weights: Vec<f64> = m.atoms().iter().map(|a| a.weight).collect();
    let per_replica: Vec<Vec<f64>> = (0..params.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>, LabError> {
            let mut rng = rng::stream(seed, streams::OCCUPATION + r as u64);
            let atom = rng::sample_index(&mut rng, &weights).expect("positive weights");
            let prior = &m.atoms()[atom].location;
            let (_, ys) = sampler.sample(&mut rng, prior, params.horizon);
            let mut pi = prior.clone();
            let mut acc = vec![0.0; p + p * (p + 1) / 2];
            for (k, &y) in ys.iter().enumerate() {
                pi = step_at(model, &pi, y, k + 1)?.0;
                if k + 1 > params.burnin {
                    crate::simplex_kernel::accumulate_moments(&mut acc, &pi, 1.0);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, _>>()?;
    let count = (params.replicas * (params.horizon - params.burnin)) as f64;
    let mut total = vec![0.0; per_replica[0].len()];
    for acc in &per_replica {
        total.iter_mut().zip(acc).for_each(|(t, x)| *t += x);
    }
    total.iter_mut().for_each(|t| *t /= count);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parity;
    use crate::simplex_kernel::{dirac_at, spread};

    #[test]
    fn parity_occupations_differ() {
        let m = parity();
        let params = OccupationParams { horizon: 2000, burnin: 100, replicas: 4 };
        let c = occupation_compare(&m, &dirac_at(m.stationary()), &spread(m.stationary()), &params, 0).unwrap();
        // E[x0²] is 1/4 under δ_λ and about 1/2 under the vertex measure.
        assert_eq!(c.moments_a[2], 0.25);
        assert!((c.moments_b[2] - 0.5).abs() < 0.05);
        assert_eq!(c.moments_b[3], 0.0);
        assert!(c.moment_gap >= 0.24);
    }

    #[test]
    fn identical_measures_give_zero() {
        let m = parity();
        let s = spread(m.stationary());
        let params = OccupationParams { horizon: 500, burnin: 10, replicas: 3 };
        let c = occupation_compare(&m, &s, &s, &params, 9).unwrap();
        assert_eq!(c.moment_gap, 0.0);
    }
}
