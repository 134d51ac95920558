use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::pattern::{search_subrectangular, PatternSearch, SupportPattern};
use super::report::{bounds, Condition, ConditionReport, Evidence, Status, WitnessSummary};
use crate::filtering::{product_normalized, simulate_stream, FilterError, ObsWord, ScaledMatrix};
use crate::linalg::{self, Matrix};
use crate::model::{HmmModel, SimplexVector};
use crate::rng::streams;
use crate::tolerances::{CLOSURE_IDENTITY_TOL, HASH_ROUNDING};

/// Accuracy assumed for the iterative `σ₂/σ₁` when reporting lower bounds.
const RATIO_ACCURACY: f64 = 1e-9;

/// A normalized product `A = M(y_1)⋯M(y_N)/‖·‖` close to the rank-one
/// matrix `u·ρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrWitness {
    pub word: ObsWord,
    /// Row sums of `A`, scaled to max entry 1.
    pub u: Vec<f64>,
    pub rho: SimplexVector,
    /// `σ₂/σ₁` of `A`; exactly 0 when every row of `A` is proportional to
    /// its pivot row in floating point.
    pub residual: f64,
    pub exact: bool,
    /// `‖A − u·ρ‖` in the max-row-sum norm.
    pub approximation_error: f64,
    pub log_scale: f64,
    #[serde(skip)]
    pub product: Matrix,
}

impl KrWitness {
    pub fn from_word(model: &HmmModel, word: &ObsWord) -> Result<Self, FilterError> {
        let prod = product_normalized(model, word)?;
        Ok(Self::from_product(word.clone(), &prod))
    }

    pub(crate) fn from_product(word: ObsWord, prod: &ScaledMatrix) -> Self {
        let a = &prod.entries;
        let rank_one = is_rank_one_exact(a);
        let residual = if rank_one { 0.0 } else { linalg::leading_singular_values(a).ratio() };
        let exact = rank_one || SupportPattern::of(a).is_subrectangular();
        let mut u = a.row_sums();
        let top = u.iter().fold(0.0f64, |m, &x| m.max(x));
        u.iter_mut().for_each(|x| *x /= top);
        let (rho, approximation_error) = best_rho(a, &u);
        KrWitness { word, u, rho, residual, exact, approximation_error, log_scale: prod.log_scale, product: a.clone() }
    }

    /// The witness bound `‖A − u·ρ‖ ≤ 2·residual + 1e-9`.
    pub fn satisfies_bound(&self) -> bool {
        self.approximation_error <= 2.0 * self.residual + 1e-9
    }
}

fn rank_one_error(a: &Matrix, u: &[f64], rho: &[f64]) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().zip(rho).map(|(x, r)| (x - u[i] * r).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Picks `ρ` among the normalized column sums and the normalized rows,
/// minimizing `‖A − u·ρ‖`.
fn best_rho(a: &Matrix, u: &[f64]) -> (SimplexVector, f64) {
    let col_sums = a.left_mul(&vec![1.0; a.rows()]);
    let mut candidates = vec![col_sums];
    candidates.extend((0..a.rows()).map(|i| a.row(i).to_vec()));
    candidates
        .into_iter()
        .filter_map(SimplexVector::from_unnormalized)
        .map(|rho| {
            let e = rank_one_error(a, u, &rho);
            (rho, e)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonzero matrix")
}

/// Every row proportional to the pivot row, tested by exact floating-point
/// equality of the cross products.
pub(crate) fn is_rank_one_exact(a: &Matrix) -> bool {
    let mut pivot = (0, 0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a.get(i, j) > a.get(pivot.0, pivot.1) {
                pivot = (i, j);
            }
        }
    }
    let (r, c) = pivot;
    let arc = a.get(r, c);
    if arc == 0.0 {
        return false;
    }
    (0..a.rows()).all(|i| (0..a.cols()).all(|j| a.get(i, j) * arc == a.get(i, c) * a.get(r, j)))
}

/// Search parameters for [`check_kr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrParams {
    pub max_len: usize,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    /// Largest normalized-product set explored when testing for closure.
    pub closure_budget: usize,
    /// Pattern budget for the (K) shortcut.
    pub max_patterns: usize,
}

impl Default for KrParams {
    fn default() -> Self {
        KrParams { max_len: 256, restarts: 16, tol: 1e-9, seed: 0, closure_budget: 4096, max_patterns: 100_000 }
    }
}

struct Closure {
    closed: bool,
    size: usize,
    min_ratio: f64,
    best: Option<KrWitness>,
}

fn rounded_key(m: &Matrix) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for x in m.iter() {
        ((x / HASH_ROUNDING).round() as i64).hash(&mut h);
    }
    h.finish()
}

fn better(a: &KrWitness, b: &KrWitness) -> bool {
    (a.residual, a.word.len()) < (b.residual, b.word.len())
}

/// Breadth-first enumeration of normalized products. The set is closed when
/// every one-symbol extension lands within `1e-12` of a known element.
fn explore_closure(model: &HmmModel, params: &KrParams) -> Closure {
    let mut entries: Vec<(ScaledMatrix, Vec<usize>)> = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut closed = true;
    let mut min_ratio = f64::INFINITY;
    let mut best: Option<KrWitness> = None;

    let mut push = |prod: ScaledMatrix, word: Vec<usize>, entries: &mut Vec<(ScaledMatrix, Vec<usize>)>, queue: &mut VecDeque<usize>| -> bool {
        let key = rounded_key(&prod.entries);
        let bucket = buckets.entry(key).or_default();
        if bucket.iter().any(|&k| entries[k].0.entries.max_abs_diff(&prod.entries) <= CLOSURE_IDENTITY_TOL) {
            return false;
        }
        let w = KrWitness::from_product(ObsWord::from_trusted(word.clone()), &prod);
        min_ratio = min_ratio.min(w.residual);
        let hit = w.residual == 0.0;
        if best.as_ref().is_none_or(|b| better(&w, b)) {
            best = Some(w);
        }
        bucket.push(entries.len());
        queue.push_back(entries.len());
        entries.push((prod, word));
        hit
    };

    for (y, m) in model.obs_matrices().iter().enumerate() {
        if let Some(prod) = ScaledMatrix::normalize(m.clone()) {
            if push(prod, vec![y], &mut entries, &mut queue) {
                return Closure { closed: false, size: entries.len(), min_ratio, best };
            }
        }
    }
    while let Some(k) = queue.pop_front() {
        if entries[k].1.len() >= params.max_len {
            closed = false;
            continue;
        }
        for (y, m) in model.obs_matrices().iter().enumerate() {
            let Some(prod) = entries[k].0.extend(m) else { continue };
            let mut word = entries[k].1.clone();
            word.push(y);
            if push(prod, word, &mut entries, &mut queue) {
                return Closure { closed: false, size: entries.len(), min_ratio, best };
            }
            if entries.len() > params.closure_budget {
                return Closure { closed: false, size: entries.len(), min_ratio, best };
            }
        }
    }
    Closure { closed, size: entries.len(), min_ratio, best }
}

/// Grows `prefix` one symbol at a time, each time appending the symbol whose
/// normalized product has the smallest `σ₂/σ₁`.
fn greedy_descent(model: &HmmModel, prefix: Vec<usize>, max_len: usize, tol: f64) -> Option<KrWitness> {
    let mut word = prefix;
    let mut cur = if word.is_empty() {
        None
    } else {
        Some(product_normalized(model, &ObsWord::from_trusted(word.clone())).ok()?)
    };
    let mut best: Option<KrWitness> = None;
    while word.len() < max_len {
        let step = model
            .obs_matrices()
            .iter()
            .enumerate()
            .filter_map(|(y, m)| {
                let next = match &cur {
                    None => ScaledMatrix::normalize(m.clone()),
                    Some(c) => c.extend(m),
                }?;
                let mut w = word.clone();
                w.push(y);
                let wit = KrWitness::from_product(ObsWord::from_trusted(w), &next);
                Some((next, wit))
            })
            .min_by(|a, b| a.1.residual.total_cmp(&b.1.residual));
        let Some((next, wit)) = step else { break };
        word = wit.word.symbols().to_vec();
        cur = Some(next);
        let done = wit.residual == 0.0 || (wit.residual <= tol && wit.satisfies_bound());
        if best.as_ref().is_none_or(|b| better(&wit, b)) {
            best = Some(wit);
        }
        if done {
            break;
        }
    }
    best
}

fn restart_prefix(model: &HmmModel, params: &KrParams, r: usize) -> Vec<usize> {
    if r == 0 {
        return Vec::new();
    }
    let len = (r * params.max_len).div_ceil(2 * params.restarts.max(1)).max(1);
    let path = simulate_stream(model, model.stationary(), len, params.seed, streams::KR_RESTART + r as u64);
    path.y
}

/// Searches for a (near) rank-one normalized product.
///
/// Certified success is an exactly rank-one product or a (K) witness;
/// certified failure requires the rounded product set to close under
/// extension with every element bounded away from rank one.
pub fn check_kr(model: &HmmModel, params: &KrParams) -> ConditionReport {
    let start = Instant::now();
    let bounds = bounds(&[
        ("max_len", json!(params.max_len)),
        ("restarts", json!(params.restarts)),
        ("tol", json!(params.tol)),
        ("seed", json!(params.seed)),
        ("closure_budget", json!(params.closure_budget)),
        ("max_patterns", json!(params.max_patterns)),
    ]);
    let closure = explore_closure(model, params);
    let mut min_ratio = closure.min_ratio;
    let mut best = closure.best;
    let mut explored = closure.size;

    let accepts = |w: &KrWitness| w.residual <= params.tol && w.satisfies_bound();
    let report = |status: Status, witness: Option<KrWitness>, via_k: bool, closed: Option<usize>, lower: Option<f64>, min_ratio: f64, explored: usize| {
        let evidence = Evidence::RankOne {
            witness: witness.as_ref().map(|w| WitnessSummary::new(model, w)),
            via_condition_k: via_k,
            closed_products: closed,
            min_ratio,
            ratio_lower_bound: lower,
            products_explored: explored,
            restarts: params.restarts,
            max_len: params.max_len,
        };
        let mut r = ConditionReport::new(Condition::KR, status, evidence, bounds.clone()).timed(start);
        r.kr_witness = witness;
        r
    };

    if let Some(w) = best.as_ref().filter(|w| w.residual == 0.0) {
        return report(Status::HoldsCertified, Some(w.clone()), false, None, None, min_ratio, explored);
    }
    let k_holds = || k_certified(model, params.max_patterns);
    if closure.closed {
        let numeric = best.clone().filter(accepts);
        if k_holds() {
            return report(Status::HoldsCertified, numeric, true, Some(closure.size), None, min_ratio, explored);
        }
        if numeric.is_some() {
            return report(Status::Holds, numeric, false, Some(closure.size), None, min_ratio, explored);
        }
        let lower = (min_ratio - RATIO_ACCURACY).max(0.0);
        return report(Status::FailsCertified, None, false, Some(closure.size), Some(lower), min_ratio, explored);
    }

    let runs: Vec<Option<KrWitness>> = (0..params.restarts.max(1))
        .into_par_iter()
        .map(|r| greedy_descent(model, restart_prefix(model, params, r), params.max_len, params.tol))
        .collect();
    explored += runs.len();
    for w in runs.into_iter().flatten() {
        min_ratio = min_ratio.min(w.residual);
        if best.as_ref().is_none_or(|b| better(&w, b)) {
            best = Some(w);
        }
    }
    if let Some(w) = best.as_ref().filter(|w| w.residual == 0.0) {
        return report(Status::HoldsCertified, Some(w.clone()), false, None, None, min_ratio, explored);
    }
    let numeric = best.filter(accepts);
    if k_holds() {
        return report(Status::HoldsCertified, numeric, true, None, None, min_ratio, explored);
    }
    if numeric.is_some() {
        return report(Status::Holds, numeric, false, None, None, min_ratio, explored);
    }
    report(Status::Unknown, None, false, None, None, min_ratio, explored)
}

fn k_certified(model: &HmmModel, max_patterns: usize) -> bool {
    let aperiodic = model.validation_report().aperiodic;
    aperiodic && matches!(search_subrectangular(model, max_patterns), PatternSearch::Found { .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fully_observed, parity, single_observation};

    fn fully() -> HmmModel {
        fully_observed(&Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()).unwrap()
    }

    #[test]
    fn exact_rank_one_detection() {
        assert!(is_rank_one_exact(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.25, 0.0]]).unwrap()));
        assert!(is_rank_one_exact(&Matrix::from_rows(&[vec![0.5, 0.25], vec![1.0, 0.5]]).unwrap()));
        assert!(!is_rank_one_exact(&Matrix::identity(2)));
        assert!(!is_rank_one_exact(&Matrix::zeros(2, 2)));
    }

    #[test]
    fn witness_from_fully_observed_word() {
        let m = fully();
        let w = KrWitness::from_word(&m, &ObsWord::new(&m, vec![0]).unwrap()).unwrap();
        assert_eq!(w.residual, 0.0);
        assert!(w.exact);
        assert_eq!(w.rho.as_slice(), &[1.0, 0.0]);
        assert_eq!(w.u[0], 1.0);
        assert!((w.u[1] - 0.2 / 0.9).abs() < 1e-15);
        assert!(w.approximation_error <= 1e-15);
    }

    #[test]
    fn parity_fails_certified() {
        let r = check_kr(&parity(), &KrParams::default());
        assert_eq!(r.status, Status::FailsCertified);
        let Evidence::RankOne { closed_products, min_ratio, .. } = r.evidence else { panic!() };
        assert_eq!(closed_products, Some(2));
        assert!((min_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fully_observed_holds_certified() {
        let m = fully();
        let r = check_kr(&m, &KrParams::default());
        assert_eq!(r.status, Status::HoldsCertified);
        let w = r.kr_witness.unwrap();
        assert_eq!(w.word.symbols(), &[0]);
        assert_eq!(w.residual, 0.0);
    }

    #[test]
    fn single_observation_holds_numerically() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let m = single_observation(&p).unwrap();
        let r = check_kr(&m, &KrParams::default());
        // P is entrywise positive, so (K) certifies even without an exact product.
        assert_eq!(r.status, Status::HoldsCertified);
        let w = r.kr_witness.unwrap();
        assert!(w.residual <= 1e-9);
        assert!(w.satisfies_bound());
    }
}
