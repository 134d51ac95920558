//! Re-verification of certified evidence with code paths independent of the
//! searches that produced it.

use serde::Serialize;

use super::verdict::{ErgodicityVerdict, VerdictStatus};
use crate::conditions::{Condition, ConditionReport, Evidence, Status};
use crate::filtering::{product_normalized, ObsWord};
use crate::linalg::Matrix;
use crate::model::HmmModel;
use crate::simplex_kernel::{check_invariant, measure_distance, KernelConfig};
use crate::tolerances::{INVARIANT_CERT_TOL, INVARIANT_SEPARATION_TOL};

/// Largest pattern monoid re-enumerated from scratch.
const AUDIT_ENUMERATION_CAP: usize = 20_000;
/// Two-by-two minors this small count as zero in the rank-one check.
const MINOR_TOL: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub checks: Vec<AuditCheck>,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> AuditCheck {
    AuditCheck { name: name.to_string(), passed, detail: detail.into() }
}

/// Re-verifies every certified condition report in the verdict and, for a
/// certified non-uniqueness verdict, both invariant measures.
pub fn audit(model: &HmmModel, verdict: &ErgodicityVerdict) -> AuditReport {
    let mut checks = Vec::new();
    for r in verdict.evidence.conditions.iter().filter(|r| r.status.is_certified()) {
        checks.push(audit_condition(model, r, &verdict.evidence.conditions));
    }
    if verdict.status == VerdictStatus::NotUniquelyErgodic && verdict.is_certified() {
        checks.extend(audit_invariants(model, verdict));
    }
    AuditReport { passed: checks.iter().all(|c| c.passed), checks }
}

pub(crate) fn audit_condition(model: &HmmModel, r: &ConditionReport, all: &[ConditionReport]) -> AuditCheck {
    match (&r.condition, &r.evidence) {
        (Condition::N, Evidence::Nondegeneracy { witness, .. }) => audit_n(model, r.status, witness.as_ref().map(|w| (w.i, w.j, w.y))),
        (Condition::O, Evidence::Observability { generators, generator_words, indistinguishable, .. }) => {
            audit_o(model, r.status, generators, generator_words, indistinguishable.as_deref())
        }
        (Condition::K, Evidence::Subrectangular { word, reachable_patterns, exhausted, .. }) => {
            audit_k(model, r.status, word.as_deref(), *reachable_patterns, *exhausted)
        }
        (Condition::KR, Evidence::RankOne { witness, via_condition_k, closed_products, .. }) => {
            if r.status == Status::HoldsCertified && *via_condition_k {
                let k_ok = all.iter().any(|k| {
                    k.condition == Condition::K && k.status == Status::HoldsCertified && audit_condition(model, k, &[]).passed
                }) || audit_k_fresh(model) == Some(true);
                check("KR via K", k_ok, "rank-one condition inferred from a verified subrectangular product")
            } else if r.status == Status::HoldsCertified {
                match witness {
                    Some(w) => audit_rank_one(model, &w.word),
                    None => check("KR", false, "certified without witness"),
                }
            } else {
                audit_kr_closure(model, closed_products.unwrap_or(0))
            }
        }
        _ => check("evidence", false, format!("unexpected evidence for {:?}", r.condition)),
    }
}

fn audit_n(model: &HmmModel, status: Status, witness: Option<(usize, usize, usize)>) -> AuditCheck {
    let p = model.num_states();
    match (status, witness) {
        (Status::HoldsCertified, _) => {
            let bad = (0..p)
                .flat_map(|i| (0..p).map(move |j| (i, j)))
                .filter(|&(i, j)| model.transition().get(i, j) > 0.0)
                .any(|(i, j)| model.obs_matrices().iter().any(|m| m.get(i, j) <= 0.0));
            check("N", !bad, "every allowed transition emits every symbol")
        }
        (Status::FailsCertified, Some((i, j, y))) => {
            let ok = model.transition().get(i, j) > 0.0 && model.obs_matrix(y).get(i, j) == 0.0;
            check("N", ok, format!("P[{i}][{j}] > 0 and M({y})[{i}][{j}] = 0"))
        }
        _ => check("N", false, "inconsistent report"),
    }
}

fn apply_word(model: &HmmModel, word: &[usize]) -> Vec<f64> {
    let mut v = vec![1.0; model.num_states()];
    for &y in word.iter().rev() {
        v = model.obs_matrix(y).mul_vec(&v);
    }
    v
}

/// Rank by Gaussian elimination with full pivoting.
fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    while r < a.len() && r < cols {
        let mut best = (r, 0, 0.0f64);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, x) in row.iter().enumerate() {
                if x.abs() > best.2 {
                    best = (i, j, x.abs());
                }
            }
        }
        if best.2 <= tol * scale {
            break;
        }
        a.swap(r, best.0);
        let c = best.1;
        let pivot = a[r].clone();
        for row in a.iter_mut().skip(r + 1) {
            let f = row[c] / pivot[c];
            row.iter_mut().zip(&pivot).for_each(|(x, p)| *x -= f * p);
        }
        r += 1;
    }
    r
}

fn audit_o(model: &HmmModel, status: Status, generators: &[Vec<f64>], words: &[Vec<String>], v: Option<&[f64]>) -> AuditCheck {
    let p = model.num_states();
    let mut parsed = Vec::new();
    for w in words {
        match ObsWord::from_labels(model, w) {
            Ok(w) => parsed.push(w),
            Err(e) => return check("O", false, e.to_string()),
        }
    }
    let reproduced = parsed.iter().zip(generators).all(|(w, g)| {
        let v = apply_word(model, w.symbols());
        v.iter().zip(g).all(|(a, b)| (a - b).abs() <= 1e-12)
    });
    if !reproduced {
        return check("O", false, "generators do not match their words");
    }
    match status {
        Status::HoldsCertified => {
            let r = rank(generators, 1e-9);
            check("O", r == p, format!("generators have rank {r} of {p}"))
        }
        Status::FailsCertified => {
            let Some(v) = v else { return check("O", false, "missing direction") };
            let sum: f64 = v.iter().sum();
            let nonzero = v.iter().any(|x| x.abs() > 0.5);
            let mut worst = 0.0f64;
            let mut word = Vec::new();
            enumerate_words(model.num_obs(), 3, &mut word, &mut |w| {
                let g = apply_word(model, w);
                worst = worst.max(crate::linalg::dot(v, &g).abs());
            });
            let ok = sum.abs() <= 1e-12 && nonzero && worst <= 1e-12;
            check("O", ok, format!("direction sums to {sum:e}; largest pairing over words of length ≤ 3 is {worst:e}"))
        }
        _ => check("O", false, "inconsistent report"),
    }
}

fn enumerate_words(q: usize, max_len: usize, word: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    f(word);
    if word.len() == max_len {
        return;
    }
    for y in 0..q {
        word.push(y);
        enumerate_words(q, max_len, word, f);
        word.pop();
    }
}

type Bool = Vec<Vec<bool>>;

fn support(m: &Matrix) -> Bool {
    (0..m.rows()).map(|i| m.row(i).iter().map(|&x| x > 0.0).collect()).collect()
}

fn bool_mul(a: &Bool, b: &Bool) -> Bool {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect()).collect()
}

/// `M_ij > 0, M_kl > 0 ⇒ M_il > 0, M_kj > 0`, checked over all quadruples.
pub(crate) fn brute_subrectangular(s: &Bool) -> bool {
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            if !s[i][j] {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    if s[k][l] && !(s[i][l] && s[k][j]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Period from return times of state 0 in boolean powers of `P`.
pub(crate) fn brute_period(p: &Matrix) -> usize {
    let n = p.rows();
    let s = support(p);
    let mut power = s.clone();
    let mut g = 0usize;
    for len in 1..=(n * n + n) {
        if power[0][0] {
            g = gcd(g, len);
        }
        power = bool_mul(&power, &s);
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn audit_k(model: &HmmModel, status: Status, word: Option<&[String]>, reachable: usize, exhausted: bool) -> AuditCheck {
    let period = brute_period(model.transition());
    match (status, word) {
        (Status::HoldsCertified, Some(word)) => {
            let w = match ObsWord::from_labels(model, word) {
                Ok(w) => w,
                Err(e) => return check("K", false, e.to_string()),
            };
            let prod = w.symbols().iter().fold(Matrix::identity(model.num_states()), |acc, &y| acc.mul(model.obs_matrix(y)));
            let s = support(&prod);
            let nonzero = s.iter().flatten().any(|&b| b);
            let ok = nonzero && brute_subrectangular(&s) && period == 1;
            check("K", ok, format!("product support subrectangular and nonzero; period {period}"))
        }
        (Status::FailsCertified, Some(_)) => check("K", period > 1, format!("subrectangular product exists but period is {period}")),
        (Status::FailsCertified, None) if exhausted => match enumerate_patterns(model) {
            Some((count, found)) => check(
                "K",
                count == reachable && !found,
                format!("{count} reachable patterns (reported {reachable}), subrectangular element: {found}"),
            ),
            None => check("K", true, "pattern monoid too large to re-enumerate; skipped"),
        },
        _ => check("K", false, "inconsistent report"),
    }
}

/// Number of reachable support patterns and whether any is nonzero and
/// subrectangular. `None` past the enumeration cap.
fn enumerate_patterns(model: &HmmModel) -> Option<(usize, bool)> {
    let gens: Vec<Bool> = model.obs_matrices().iter().map(support).collect();
    let mut seen: Vec<Bool> = Vec::new();
    let mut frontier: Vec<Bool> = Vec::new();
    for g in &gens {
        if !seen.contains(g) {
            seen.push(g.clone());
            frontier.push(g.clone());
        }
    }
    while let Some(s) = frontier.pop() {
        for g in &gens {
            let next = bool_mul(&s, g);
            if !seen.contains(&next) {
                seen.push(next.clone());
                frontier.push(next);
                if seen.len() > AUDIT_ENUMERATION_CAP {
                    return None;
                }
            }
        }
    }
    let found = seen.iter().any(|s| s.iter().flatten().any(|&b| b) && brute_subrectangular(s));
    Some((seen.len(), found))
}

fn audit_k_fresh(model: &HmmModel) -> Option<bool> {
    let (_, found) = enumerate_patterns(model)?;
    Some(found && brute_period(model.transition()) == 1)
}

/// Largest absolute 2×2 minor.
pub(crate) fn max_minor(a: &Matrix) -> f64 {
    let (r, c) = (a.rows(), a.cols());
    let mut worst = 0.0f64;
    for i in 0..r {
        for k in i + 1..r {
            for j in 0..c {
                for l in j + 1..c {
                    worst = worst.max((a.get(i, j) * a.get(k, l) - a.get(i, l) * a.get(k, j)).abs());
                }
            }
        }
    }
    worst
}

fn audit_rank_one(model: &HmmModel, word: &[String]) -> AuditCheck {
    let w = match ObsWord::from_labels(model, word) {
        Ok(w) => w,
        Err(e) => return check("KR", false, e.to_string()),
    };
    match product_normalized(model, &w) {
        Ok(prod) => {
            let m = max_minor(&prod.entries);
            check("KR", m <= MINOR_TOL, format!("largest 2x2 minor of the normalized product is {m:e}"))
        }
        Err(e) => check("KR", false, e.to_string()),
    }
}

/// Re-enumerates normalized products by linear search and confirms the set
/// closes at the reported size with no element of rank one.
fn audit_kr_closure(model: &HmmModel, reported: usize) -> AuditCheck {
    let mut set: Vec<Matrix> = Vec::new();
    let mut frontier: Vec<Matrix> = Vec::new();
    let normalize = |m: Matrix| {
        let n = m.row_sum_norm();
        (n > 0.0).then(|| m.scale(1.0 / n))
    };
    for m in model.obs_matrices() {
        if let Some(n) = normalize(m.clone()) {
            if !set.iter().any(|s| s.max_abs_diff(&n) <= 1e-12) {
                set.push(n.clone());
                frontier.push(n);
            }
        }
    }
    while let Some(a) = frontier.pop() {
        for m in model.obs_matrices() {
            if let Some(n) = normalize(a.mul(m)) {
                if !set.iter().any(|s| s.max_abs_diff(&n) <= 1e-12) {
                    set.push(n.clone());
                    frontier.push(n);
                    if set.len() > reported {
                        return check("KR", false, format!("product set exceeds the reported size {reported}"));
                    }
                }
            }
        }
    }
    let min_minor = set.iter().map(max_minor).fold(f64::INFINITY, f64::min);
    let ok = set.len() == reported && min_minor > 1e-9;
    check("KR", ok, format!("{} normalized products, smallest largest-minor {min_minor:e}", set.len()))
}

fn audit_invariants(model: &HmmModel, verdict: &ErgodicityVerdict) -> Vec<AuditCheck> {
    let config = KernelConfig::default();
    let measures: Vec<_> = verdict.evidence.invariants.iter().filter_map(|f| f.measure.as_ref()).collect();
    let mut out = Vec::new();
    for (k, m) in measures.iter().enumerate() {
        let c = match check_invariant(model, m, INVARIANT_CERT_TOL, &config) {
            Ok(c) => check(&format!("invariant {k}"), c.ok, format!("residual {:e}", c.residual)),
            Err(e) => check(&format!("invariant {k}"), false, e.to_string()),
        };
        out.push(c);
    }
    let distinct = measures.len() == 2 && measure_distance(measures[0], measures[1]).value > INVARIANT_SEPARATION_TOL;
    out.push(check("distinct invariants", distinct, "two invariant measures at positive distance"));
    out
}
