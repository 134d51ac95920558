//! Markov-chain primitives on the transition matrix: irreducibility,
//! period and the stationary law.

use super::{ModelError, SimplexVector};
use crate::linalg::{self, Matrix};
use crate::tolerances::{DIRECT_SOLVE_MAX_STATES, POWER_ITERATION_CAP};

/// Adjacency lists of the support digraph `i -> j` iff `P_ij > 0`.
pub(crate) fn support_graph(p: &Matrix) -> Vec<Vec<usize>> {
    (0..p.rows())
        .map(|i| (0..p.cols()).filter(|&j| p.get(i, j) > 0.0).collect())
        .collect()
}

fn reachable(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn reversed(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            rev[v].push(u);
        }
    }
    rev
}

pub fn is_irreducible(p: &Matrix) -> bool {
    let n = p.rows();
    if n == 0 {
        return false;
    }
    let adj = support_graph(p);
    reachable(&adj, 0).iter().all(|&b| b) && reachable(&reversed(&adj), 0).iter().all(|&b| b)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// gcd of the lengths of closed walks through state 0, computed from BFS
/// levels on the communicating class of 0. Returns 0 when that class has no
/// cycle at all.
pub(crate) fn class_period(p: &Matrix) -> usize {
    let adj = support_graph(p);
    let fwd = reachable(&adj, 0);
    let bwd = reachable(&reversed(&adj), 0);
    let in_class: Vec<bool> = fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect();
    let mut level = vec![usize::MAX; adj.len()];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !in_class[v] {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                g = gcd(g, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    g
}

/// Common period of all states of an irreducible chain.
pub fn period(p: &Matrix) -> Result<usize, ModelError> {
    if !is_irreducible(p) {
        return Err(ModelError::NotIrreducible);
    }
    Ok(class_period(p))
}

/// Invariant law `λP = λ` of an irreducible stochastic matrix.
///
/// Up to 512 states this solves the linear system with one balance equation
/// replaced by the normalization, refining until the residual meets `tol`.
/// Larger chains use power iteration on the lazy chain `(P + I)/2`.
pub fn stationary_distribution(p: &Matrix, tol: f64) -> Result<SimplexVector, ModelError> {
    if !is_irreducible(p) {
        return Err(ModelError::NotIrreducible);
    }
    let n = p.rows();
    if n <= DIRECT_SOLVE_MAX_STATES {
        direct_stationary(p, tol)
    } else {
        power_stationary(p, tol)
    }
}

pub(crate) fn stationary_residual(p: &Matrix, lambda: &[f64]) -> f64 {
    linalg::l1_distance(&p.left_mul(lambda), lambda)
}

fn direct_stationary(p: &Matrix, tol: f64) -> Result<SimplexVector, ModelError> {
    let n = p.rows();
    // Rows of the system are the balance equations (Pᵀ − I)λ = 0; the last
    // one is redundant for an irreducible chain and becomes Σλ = 1.
    let system = Matrix::from_fn(n, n, |i, j| {
        if i == n - 1 {
            1.0
        } else {
            p.get(j, i) - if i == j { 1.0 } else { 0.0 }
        }
    });
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut lambda = linalg::solve(&system, &rhs).ok_or(ModelError::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        lambda.iter_mut().for_each(|x| *x = x.max(0.0));
        let s: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|x| *x /= s);
        residual = stationary_residual(p, &lambda);
        if residual <= tol {
            return Ok(SimplexVector::from_unnormalized(lambda).expect("positive mass"));
        }
        let applied = system.mul_vec(&lambda);
        let r: Vec<f64> = rhs.iter().zip(&applied).map(|(b, a)| b - a).collect();
        let Some(d) = linalg::solve(&system, &r) else { break };
        lambda.iter_mut().zip(&d).for_each(|(x, dx)| *x += dx);
    }
    Err(ModelError::NoConvergence { iterations: 4, residual })
}

fn power_stationary(p: &Matrix, tol: f64) -> Result<SimplexVector, ModelError> {
    let n = p.rows();
    let mut lambda = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        let moved = p.left_mul(&lambda);
        residual = linalg::l1_distance(&moved, &lambda);
        if residual <= tol {
            return Ok(SimplexVector::from_unnormalized(lambda).expect("positive mass"));
        }
        let mut next: Vec<f64> = moved.iter().zip(&lambda).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        lambda = next;
    }
    Err(ModelError::NoConvergence { iterations: POWER_ITERATION_CAP, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let parity = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let l = stationary_distribution(&parity, 1e-12).unwrap();
        assert_abs_diff_eq!(l[0], 0.5, epsilon = 1e-15);

        let p = m(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let l = stationary_distribution(&p, 1e-12).unwrap();
        assert_abs_diff_eq!(l[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1], 1.0 / 3.0, epsilon = 1e-12);

        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let l = stationary_distribution(&swap, 1e-12).unwrap();
        assert_abs_diff_eq!(l[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn power_path_agrees_with_direct_path() {
        let p = m(&[&[0.0, 1.0, 0.0], &[0.3, 0.0, 0.7], &[1.0, 0.0, 0.0]]);
        let direct = direct_stationary(&p, 1e-12).unwrap();
        let power = power_stationary(&p, 1e-13).unwrap();
        assert!(linalg::l1_distance(&direct, &power) < 1e-11);
    }

    #[test]
    fn reducible_is_rejected() {
        let p = Matrix::identity(2);
        assert!(matches!(stationary_distribution(&p, 1e-12), Err(ModelError::NotIrreducible)));
        assert!(matches!(period(&p), Err(ModelError::NotIrreducible)));
    }

    #[test]
    fn periods() {
        assert_eq!(period(&m(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap(), 1);
        assert_eq!(period(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap(), 2);
        let cyc3 = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(period(&cyc3).unwrap(), 3);
        // Cycles of lengths 2 and 3 through state 0.
        let mixed = m(&[&[0.0, 0.5, 0.5], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(period(&mixed).unwrap(), 1);
    }
}
