use super::{FilterError, ObsWord};
use crate::linalg::Matrix;
use crate::model::HmmModel;

/// A nonnegative matrix kept at unit max-row-sum norm, with the removed
/// factor tracked as a natural log.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    pub entries: Matrix,
    pub log_scale: f64,
}

impl ScaledMatrix {
    /// Normalizes `m`; `None` for the zero matrix.
    pub fn normalize(m: Matrix) -> Option<Self> {
        Self::rescaled(m, 0.0)
    }

    fn rescaled(m: Matrix, log_scale: f64) -> Option<Self> {
        let norm = m.row_sum_norm();
        if !(norm > 0.0) {
            return None;
        }
        Some(ScaledMatrix { entries: m.scale(1.0 / norm), log_scale: log_scale + norm.ln() })
    }

    /// Appends one factor on the right and renormalizes.
    pub fn extend(&self, factor: &Matrix) -> Option<Self> {
        Self::rescaled(self.entries.mul(factor), self.log_scale)
    }

    /// Undoes the scaling. Only meaningful when `log_scale` is moderate.
    pub fn unscaled(&self) -> Matrix {
        self.entries.scale(self.log_scale.exp())
    }
}

/// `M(y_1)⋯M(y_N) / ‖M(y_1)⋯M(y_N)‖`, rescaled after every factor so long
/// words neither underflow nor overflow.
pub fn product_normalized(model: &HmmModel, word: &ObsWord) -> Result<ScaledMatrix, FilterError> {
    let (&first, rest) = word
        .symbols()
        .split_first()
        .ok_or_else(|| FilterError::InvalidArgument("product of an empty word".into()))?;
    let mut acc = ScaledMatrix::normalize(model.obs_matrix(first).clone()).ok_or(FilterError::ZeroProduct)?;
    for &y in rest {
        acc = acc.extend(model.obs_matrix(y)).ok_or(FilterError::ZeroProduct)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fully_observed, parity};
    use approx::assert_abs_diff_eq;

    #[test]
    fn parity_products() {
        let m = parity();
        let one = product_normalized(&m, &ObsWord::new(&m, vec![1]).unwrap()).unwrap();
        assert_eq!(one.entries, Matrix::identity(2));
        assert_abs_diff_eq!(one.log_scale, 0.5f64.ln(), epsilon = 1e-15);
        let two = product_normalized(&m, &ObsWord::new(&m, vec![0, 0]).unwrap()).unwrap();
        assert_eq!(two.entries, Matrix::identity(2));
        assert_abs_diff_eq!(two.log_scale, 2.0 * 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn fully_observed_product_is_one_column() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = fully_observed(&p).unwrap();
        let s = product_normalized(&m, &ObsWord::new(&m, vec![0]).unwrap()).unwrap();
        assert_eq!(s.entries.get(0, 0), 1.0);
        assert_abs_diff_eq!(s.entries.get(1, 0), 0.2 / 0.9, epsilon = 1e-15);
        assert_eq!(s.entries.get(0, 1), 0.0);
        assert_eq!(s.entries.get(1, 1), 0.0);
    }

    #[test]
    fn long_words_do_not_underflow() {
        let m = parity();
        let w = ObsWord::new(&m, vec![0; 100_000]).unwrap();
        let s = product_normalized(&m, &w).unwrap();
        assert_eq!(s.entries, Matrix::identity(2));
        assert_abs_diff_eq!(s.log_scale, 100_000.0 * 0.5f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn zero_product_and_empty_word() {
        let p = Matrix::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.0]])
            .unwrap();
        let m = fully_observed(&p).unwrap();
        // Entering state 1 and then state 0 is impossible from anywhere.
        let w = ObsWord::new(&m, vec![1, 0]).unwrap();
        assert_eq!(product_normalized(&m, &w), Err(FilterError::ZeroProduct));
        assert!(matches!(product_normalized(&m, &ObsWord::default()), Err(FilterError::InvalidArgument(_))));
    }
}
