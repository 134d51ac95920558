use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::tolerances::SUM_TOL;

/// A probability vector on the state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Checks nonnegativity and that the entries sum to one within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        Self::with_tolerance(weights, SUM_TOL).map(|(v, _)| v)
    }

    /// Accepts weights summing to one within `tol`, then renormalizes exactly.
    pub fn normalized(weights: Vec<f64>, tol: f64) -> Result<Self, ModelError> {
        let (v, sum) = Self::with_tolerance(weights, tol)?;
        Ok(SimplexVector(v.0.into_iter().map(|x| x / sum).collect()))
    }

    fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<(Self, f64), ModelError> {
        if weights.is_empty() {
            return Err(ModelError::InvalidSimplex("empty vector".into()));
        }
        if let Some(x) = weights.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(ModelError::InvalidSimplex(format!("entry {x} is negative or not finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(ModelError::InvalidSimplex(format!("entries sum to {sum}, not 1")));
        }
        Ok((SimplexVector(weights), sum))
    }

    /// Normalizes a nonnegative vector by its sum. Returns `None` when the
    /// sum is zero or not finite.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Option<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return None;
        }
        weights.iter_mut().for_each(|x| *x /= sum);
        Some(SimplexVector(weights))
    }

    pub fn point_mass(dim: usize, at: usize) -> Self {
        assert!(at < dim, "point mass index out of range");
        let mut v = vec![0.0; dim];
        v[at] = 1.0;
        SimplexVector(v)
    }

    pub fn uniform(dim: usize) -> Self {
        SimplexVector(vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `true` when `self ≪ other`, i.e. every state charged by `self` is charged by `other`.
    pub fn is_dominated_by(&self, other: &SimplexVector) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| *a == 0.0 || *b > 0.0)
    }

    pub fn is_vertex(&self) -> bool {
        self.0.iter().filter(|&&x| x > 0.0).count() == 1
    }
}

impl Deref for SimplexVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = ModelError;

    fn try_from(v: Vec<f64>) -> Result<Self, ModelError> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(v: SimplexVector) -> Vec<f64> {
        v.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_vectors() {
        assert!(SimplexVector::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexVector::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexVector::new(vec![]).is_err());
        assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexVector::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn normalized_accepts_loose_sums() {
        let v = SimplexVector::normalized(vec![0.333333333, 0.666666667], 1e-9).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(SimplexVector::normalized(vec![0.3, 0.6], 1e-9).is_err());
    }

    #[test]
    fn domination() {
        let a = SimplexVector::point_mass(2, 0);
        let b = SimplexVector::uniform(2);
        assert!(a.is_dominated_by(&b));
        assert!(!b.is_dominated_by(&a));
    }

    #[test]
    fn json_is_validated() {
        assert!(serde_json::from_str::<SimplexVector>("[0.5,0.5]").is_ok());
        assert!(serde_json::from_str::<SimplexVector>("[0.5,0.7]").is_err());
    }
}
