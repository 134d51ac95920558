//! Random valid models for tests, property checks and benchmarks.

use rand::Rng;

use super::{HmmModel, RawModel};
use crate::linalg::Matrix;

/// Shape of a randomly drawn model.
#[derive(Debug, Clone, Copy)]
pub enum Sparsity {
    /// Every `M(y)` entrywise positive (so `P` is positive and aperiodic).
    Positive,
    /// Each entry is zeroed with the given probability; the cycle
    /// `0 → 1 → … → p−1 → 0` is always kept so `P` stays irreducible.
    Sparse(f64),
}

/// Draws a valid model with `p` states and `q` observation symbols.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, p: usize, q: usize, sparsity: Sparsity) -> HmmModel {
    assert!(p >= 1 && q >= 1);
    let mut raw: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; p]; p]; q];
    for i in 0..p {
        for j in 0..p {
            for m in raw.iter_mut() {
                m[i][j] = match sparsity {
                    Sparsity::Positive => rng.gen_range(0.05..1.0),
                    Sparsity::Sparse(zero_prob) => {
                        if rng.gen::<f64>() < zero_prob {
                            0.0
                        } else {
                            rng.gen_range(0.05..1.0)
                        }
                    }
                };
            }
        }
        if let Sparsity::Sparse(_) = sparsity {
            let y = rng.gen_range(0..q);
            if raw[y][i][(i + 1) % p] == 0.0 {
                raw[y][i][(i + 1) % p] = rng.gen_range(0.05..1.0);
            }
        }
        let total: f64 = raw.iter().map(|m| m[i].iter().sum::<f64>()).sum();
        for m in raw.iter_mut() {
            m[i].iter_mut().for_each(|x| *x /= total);
        }
    }
    // Fold the rounding error of each row into its largest entry so rows sum
    // to one well inside the validation tolerance.
    for i in 0..p {
        let total: f64 = raw.iter().map(|m| m[i].iter().sum::<f64>()).sum();
        let (y, j) = (0..q)
            .flat_map(|y| (0..p).map(move |j| (y, j)))
            .max_by(|a, b| raw[a.0][i][a.1].total_cmp(&raw[b.0][i][b.1]))
            .unwrap();
        raw[y][i][j] += 1.0 - total;
    }
    let matrices = raw.iter().map(|m| Matrix::from_rows(m).unwrap()).collect();
    HmmModel::new(RawModel {
        states: (0..p).map(|i| format!("s{i}")).collect(),
        observations: (0..q).map(|y| format!("y{y}")).collect(),
        matrices,
    })
    .expect("random model is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn random_models_validate() {
        let mut r = rng::stream(3, 0);
        for _ in 0..50 {
            let p = r.gen_range(1..=5);
            let q = r.gen_range(1..=4);
            let m = random_model(&mut r, p, q, Sparsity::Sparse(0.5));
            assert!(m.validation_report().ok);
            let m = random_model(&mut r, p, q, Sparsity::Positive);
            assert!(m.validation_report().aperiodic);
        }
    }
}
