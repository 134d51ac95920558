use std::collections::HashMap;

use serde::Serialize;

use super::{kernel_push, measure_distance, AtomicMeasure, DistanceMethod, KernelConfig, KernelError};
use crate::model::HmmModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Converged,
    Cycling,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSearch {
    pub status: SearchStatus,
    pub measure: AtomicMeasure,
    /// Distance between `measure` and its push.
    pub residual: f64,
    pub method: DistanceMethod,
    /// Number of pushes applied to the start measure.
    pub steps: usize,
    /// Length of the detected cycle; `measure` is then its Cesàro average.
    pub period: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub ok: bool,
    pub residual: f64,
    pub method: DistanceMethod,
}

/// Compares `measure` with `measure · Π`.
pub fn check_invariant(model: &HmmModel, measure: &AtomicMeasure, tol: f64, config: &KernelConfig) -> Result<InvariantCheck, KernelError> {
    let pushed = kernel_push(model, measure, config)?;
    let d = measure_distance(measure, &pushed);
    Ok(InvariantCheck { ok: d.value <= tol, residual: d.value, method: d.method })
}

/// Iterates the kernel from `start` until successive iterates are within
/// `tol`, an iterate recurs, or `max_steps` pushes have been spent.
///
/// On recurrence the average over one period is returned together with its
/// own invariance residual.
pub fn find_invariant(
    model: &HmmModel,
    start: &AtomicMeasure,
    max_steps: usize,
    tol: f64,
    config: &KernelConfig,
) -> Result<InvariantSearch, KernelError> {
    let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut history: Vec<AtomicMeasure> = Vec::new();
    let mut current = start.clone();
    let mut last = None;
    for step in 0..=max_steps {
        let hash = current.rounded_hash();
        let earlier = seen.get(&hash).and_then(|steps| {
            steps.iter().copied().find(|&s| measure_distance(&history[s], &current).value <= tol)
        });
        if let Some(s) = earlier {
            let period = step - s;
            let c = 1.0 / period as f64;
            let parts: Vec<(f64, &AtomicMeasure)> = history[s..step].iter().map(|m| (c, m)).collect();
            let average = AtomicMeasure::mixture(&parts, config.merge_tol);
            let check = check_invariant(model, &average, tol, config)?;
            return Ok(InvariantSearch {
                status: SearchStatus::Cycling,
                measure: average,
                residual: check.residual,
                method: check.method,
                steps: step,
                period: Some(period),
            });
        }
        if step == max_steps {
            break;
        }
        let next = kernel_push(model, &current, config)?;
        let d = measure_distance(&current, &next);
        if d.value <= tol {
            return Ok(InvariantSearch {
                status: SearchStatus::Converged,
                measure: current,
                residual: d.value,
                method: d.method,
                steps: step,
                period: None,
            });
        }
        last = Some(d);
        seen.entry(hash).or_default().push(step);
        history.push(std::mem::replace(&mut current, next));
    }
    let d = match last {
        Some(d) => d,
        None => measure_distance(&current, &kernel_push(model, &current, config)?),
    };
    Ok(InvariantSearch {
        status: SearchStatus::BudgetExhausted,
        measure: current,
        residual: d.value,
        method: d.method,
        steps: max_steps,
        period: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{fully_observed, parity, single_observation, SimplexVector};
    use crate::simplex_kernel::{dirac_at, spread, Atom};

    fn sv(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn parity_seeds_are_fixed_at_step_zero() {
        let m = parity();
        let cfg = KernelConfig::default();
        for start in [dirac_at(m.stationary()), spread(m.stationary())] {
            let r = find_invariant(&m, &start, 10, 1e-12, &cfg).unwrap();
            assert_eq!(r.status, SearchStatus::Converged);
            assert_eq!(r.steps, 0);
            assert_eq!(r.residual, 0.0);
            assert_eq!(r.measure, start);
        }
    }

    #[test]
    fn parity_checks() {
        let m = parity();
        let cfg = KernelConfig::default();
        let pair = AtomicMeasure::new(vec![
            Atom { location: sv(&[0.3, 0.7]), weight: 0.5 },
            Atom { location: sv(&[0.7, 0.3]), weight: 0.5 },
        ])
        .unwrap();
        let c = check_invariant(&m, &pair, 1e-12, &cfg).unwrap();
        assert!(c.ok);
        assert_eq!(c.residual, 0.0);
        let c = check_invariant(&m, &dirac_at(&sv(&[0.3, 0.7])), 1e-12, &cfg).unwrap();
        assert!(!c.ok);
        assert!((c.residual - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fully_observed_converges_to_vertex_law() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = fully_observed(&p).unwrap();
        let r = find_invariant(&m, &dirac_at(m.stationary()), 50, 1e-12, &KernelConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::Converged);
        let atoms = r.measure.atoms();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].location.as_slice(), &[0.0, 1.0]);
        assert!((atoms[0].weight - 1.0 / 3.0).abs() < 1e-9);
        assert!((atoms[1].weight - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn periodic_chain_cycles() {
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = single_observation(&swap).unwrap();
        let r = find_invariant(&m, &dirac_at(&sv(&[0.25, 0.75])), 10, 1e-12, &KernelConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::Cycling);
        assert_eq!(r.period, Some(2));
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.measure.len(), 2);
    }

    #[test]
    fn budget_exhaustion_reports_last_residual() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = single_observation(&p).unwrap();
        let r = find_invariant(&m, &dirac_at(&sv(&[1.0, 0.0])), 3, 1e-12, &KernelConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::BudgetExhausted);
        assert!(r.residual > 0.0);
    }
}
