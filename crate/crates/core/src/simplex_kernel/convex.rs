use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::AtomicMeasure;
use crate::linalg;
use crate::tolerances::CONVEX_ORDER_SLACK;

const STANDARD_SEED: u64 = 0xC0FFEE;
const STANDARD_SIZE: usize = 200;
const STANDARD_MAX_PIECES: usize = 4;

/// `x ↦ max_k (a_k·x + b_k)`; convex by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxAffine {
    pub pieces: Vec<(Vec<f64>, f64)>,
}

impl MaxAffine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces.iter().map(|(a, b)| linalg::dot(a, x) + b).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A finite family of convex test functions on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexTestFamily {
    dim: usize,
    functions: Vec<MaxAffine>,
}

impl ConvexTestFamily {
    pub fn new(dim: usize, functions: Vec<MaxAffine>) -> Self {
        assert!(functions.iter().flat_map(|f| &f.pieces).all(|(a, _)| a.len() == dim), "dimension mismatch");
        ConvexTestFamily { dim, functions }
    }

    /// `size` functions, each the max of 1 to `max_pieces` affine maps with
    /// coefficients and offsets uniform on `[-1, 1]`.
    pub fn generate(dim: usize, size: usize, max_pieces: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let functions = (0..size)
            .map(|_| {
                let k = rng.gen_range(1..=max_pieces);
                let pieces = (0..k)
                    .map(|_| {
                        let a = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                        (a, rng.gen_range(-1.0..=1.0))
                    })
                    .collect();
                MaxAffine { pieces }
            })
            .collect();
        ConvexTestFamily { dim, functions }
    }

    /// The fixed 200-function family used throughout.
    pub fn standard(dim: usize) -> Self {
        Self::generate(dim, STANDARD_SIZE, STANDARD_MAX_PIECES, STANDARD_SEED)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn functions(&self) -> &[MaxAffine] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexOrderResult {
    pub holds: bool,
    /// Index of the function with the largest `∫f da − ∫f db`.
    pub worst_index: Option<usize>,
    pub worst_gap: f64,
}

/// Tests `a ≺ b` against every function of the family: holds iff
/// `∫f da ≤ ∫f db + 1e-10` throughout.
pub fn convex_order_leq(a: &AtomicMeasure, b: &AtomicMeasure, family: &ConvexTestFamily) -> ConvexOrderResult {
    let mut worst_index = None;
    let mut worst_gap = f64::NEG_INFINITY;
    for (k, f) in family.functions.iter().enumerate() {
        let gap = a.integrate(|x| f.eval(x)) - b.integrate(|x| f.eval(x));
        if gap > worst_gap {
            worst_gap = gap;
            worst_index = Some(k);
        }
    }
    ConvexOrderResult { holds: worst_gap <= CONVEX_ORDER_SLACK, worst_index, worst_gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parity;
    use crate::simplex_kernel::{dirac_at, spread};

    #[test]
    fn standard_family_is_deterministic() {
        let a = ConvexTestFamily::standard(3);
        assert_eq!(a, ConvexTestFamily::standard(3));
        assert_eq!(a.len(), 200);
        assert!(a.functions().iter().all(|f| (1..=4).contains(&f.pieces.len())));
    }

    #[test]
    fn parity_order_and_reverse_violation() {
        let m = parity();
        let lo = dirac_at(m.stationary());
        let hi = spread(m.stationary());
        assert!(convex_order_leq(&lo, &hi, &ConvexTestFamily::standard(2)).holds);
        let max_coord = MaxAffine { pieces: vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)] };
        let fam = ConvexTestFamily::new(2, vec![max_coord]);
        let r = convex_order_leq(&hi, &lo, &fam);
        assert!(!r.holds);
        assert_eq!(r.worst_index, Some(0));
        assert_eq!(r.worst_gap, 0.5);
        assert!(convex_order_leq(&hi, &hi, &ConvexTestFamily::standard(2)).holds);
    }
}
