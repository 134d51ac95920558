use rayon::prelude::*;

use super::{Atom, AtomicMeasure, KernelConfig, KernelError};
use crate::model::{HmmModel, SimplexVector};

/// One application of the filter kernel: `measure · Π`.
///
/// Every atom `(μ, w)` splits into one atom per symbol `y` with
/// `μM(y)1 > 0`, located at the posterior and weighted by `w·μM(y)1`.
pub fn kernel_push(model: &HmmModel, measure: &AtomicMeasure, config: &KernelConfig) -> Result<AtomicMeasure, KernelError> {
    let p = model.num_states();
    if measure.dim() != p {
        return Err(KernelError::DimensionMismatch { expected: p, found: measure.dim() });
    }
    let split = |a: &Atom| -> Vec<Atom> {
        model
            .obs_matrices()
            .iter()
            .filter_map(|m| {
                let v = m.left_mul(&a.location);
                let mass: f64 = v.iter().sum();
                if mass > 0.0 {
                    let loc = SimplexVector::from_unnormalized(v)?;
                    Some(Atom { location: loc, weight: a.weight * mass })
                } else {
                    None
                }
            })
            .collect()
    };
    let atoms: Vec<Atom> = if measure.len() >= 256 {
        measure.atoms().par_iter().flat_map_iter(split).collect()
    } else {
        measure.atoms().iter().flat_map(split).collect()
    };
    let mut out = AtomicMeasure::canonical(atoms, config.merge_tol);
    if out.len() > config.atom_budget {
        return Err(KernelError::AtomBudgetExceeded { atoms: out.len(), budget: config.atom_budget });
    }
    out.renormalize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{fully_observed, parity};
    use crate::simplex_kernel::{barycenter, dirac_at, spread};

    fn sv(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    fn pair(eps: f64) -> AtomicMeasure {
        AtomicMeasure::new(vec![
            Atom { location: sv(&[eps, 1.0 - eps]), weight: 0.5 },
            Atom { location: sv(&[1.0 - eps, eps]), weight: 0.5 },
        ])
        .unwrap()
    }

    #[test]
    fn parity_fixed_points() {
        let m = parity();
        let cfg = KernelConfig::default();
        let top = spread(m.stationary());
        assert_eq!(kernel_push(&m, &top, &cfg).unwrap(), top);
        let bottom = dirac_at(m.stationary());
        assert_eq!(kernel_push(&m, &bottom, &cfg).unwrap(), bottom);
        let p = pair(0.2);
        assert_eq!(kernel_push(&m, &p, &cfg).unwrap(), p);
    }

    #[test]
    fn parity_dirac_splits_into_pair() {
        let m = parity();
        let out = kernel_push(&m, &dirac_at(&sv(&[0.3, 0.7])), &KernelConfig::default()).unwrap();
        assert_eq!(out, pair(0.3));
    }

    #[test]
    fn fully_observed_lands_on_vertices() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = fully_observed(&p).unwrap();
        let out = kernel_push(&m, &dirac_at(&sv(&[0.5, 0.5])), &KernelConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.atoms().iter().all(|a| a.location.is_vertex()));
        let b = barycenter(&out);
        assert!((b[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let other = Matrix::from_rows(&[vec![0.1, 0.4], vec![0.3, 0.2]]).unwrap();
        let m = crate::model::HmmModel::from_matrices(vec![p.scale(0.5), other]).unwrap();
        let cfg = KernelConfig { atom_budget: 3, ..KernelConfig::default() };
        let mut cur = dirac_at(&sv(&[0.3, 0.7]));
        let mut err = None;
        for _ in 0..4 {
            match kernel_push(&m, &cur, &cfg) {
                Ok(next) => cur = next,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(err, Some(KernelError::AtomBudgetExceeded { budget: 3, .. })));
    }
}
