//! Reference models used throughout the test-suite and the CLI.

use super::{HmmModel, ModelError, RawModel};
use crate::linalg::Matrix;

/// Two states; observation `1` iff the chain did not move:
/// `M(0) = ½·swap`, `M(1) = ½·I`. Its filter has many invariant measures.
pub fn parity() -> HmmModel {
    let m0 = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
    let m1 = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
    HmmModel::new(RawModel {
        states: vec!["0".into(), "1".into()],
        observations: vec!["0".into(), "1".into()],
        matrices: vec![m0, m1],
    })
    .expect("parity model is valid")
}

/// The signal is observed exactly: `M(y)_ij = P_ij · 1{j = y}`.
pub fn fully_observed(transition: &Matrix) -> Result<HmmModel, ModelError> {
    let p = transition.rows();
    let matrices = (0..p)
        .map(|y| Matrix::from_fn(p, p, |i, j| if j == y { transition.get(i, j) } else { 0.0 }))
        .collect();
    HmmModel::new(RawModel {
        states: (0..p).map(|i| format!("s{i}")).collect(),
        observations: (0..p).map(|y| format!("y{y}")).collect(),
        matrices,
    })
}

/// A single uninformative observation symbol, `M(y0) = P`.
pub fn single_observation(transition: &Matrix) -> Result<HmmModel, ModelError> {
    HmmModel::from_matrices(vec![transition.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_observed_sums_back_to_transition() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = fully_observed(&p).unwrap();
        assert_eq!(m.transition(), &p);
        assert_eq!(m.obs_matrix(0).to_rows(), vec![vec![0.9, 0.0], vec![0.2, 0.0]]);
        for s in m.transition().row_sums() {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}
