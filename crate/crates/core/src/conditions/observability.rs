use std::collections::VecDeque;
use std::time::Instant;

use serde_json::json;

use super::report::{bounds, Condition, ConditionReport, Evidence, Status};
use crate::linalg;
use crate::model::HmmModel;

/// Relative size below which a new vector is considered already in the span.
const SPAN_TOL: f64 = 1e-9;

/// Observability: the smallest subspace containing `1` and closed under
/// every `v ↦ M(y)v` must be the whole space. Priors differing along a
/// direction orthogonal to that subspace produce identical likelihoods
/// for every observation word.
pub fn check_o(model: &HmmModel) -> ConditionReport {
    let start = Instant::now();
    let p = model.num_states();
    let mut span = Span::default();
    span.add(vec![1.0; p], Vec::new());
    while let Some(k) = span.queue.pop_front() {
        for y in 0..model.num_obs() {
            if span.ortho.len() == p {
                break;
            }
            let v = model.obs_matrix(y).mul_vec(&span.generators[k]);
            let mut w = vec![y];
            w.extend_from_slice(&span.words[k]);
            span.add(v, w);
        }
    }
    let Span { generators, words, ortho, .. } = span;

    let dimension = ortho.len();
    let observable = dimension == p;
    let indistinguishable = (!observable).then(|| complement_direction(&ortho, p));
    let generator_words = words.iter().map(|w| w.iter().map(|&y| model.obs_labels()[y].clone()).collect()).collect();
    let evidence = Evidence::Observability {
        dimension,
        generators,
        generator_words,
        indistinguishable,
        uniformly_observable: observable,
    };
    let status = if observable { Status::HoldsCertified } else { Status::FailsCertified };
    ConditionReport::new(Condition::O, status, evidence, bounds(&[("span_tol", json!(SPAN_TOL))])).timed(start)
}

#[derive(Default)]
struct Span {
    generators: Vec<Vec<f64>>,
    words: Vec<Vec<usize>>,
    ortho: Vec<Vec<f64>>,
    queue: VecDeque<usize>,
}

impl Span {
    fn add(&mut self, v: Vec<f64>, word: Vec<usize>) {
        let scale = linalg::norm2(&v);
        if scale == 0.0 {
            return;
        }
        let mut r = v.clone();
        orthogonalize(&mut r, &self.ortho);
        let rn = linalg::norm2(&r);
        if rn > SPAN_TOL * scale {
            r.iter_mut().for_each(|x| *x /= rn);
            self.ortho.push(r);
            self.generators.push(v);
            self.words.push(word);
            self.queue.push_back(self.generators.len() - 1);
        }
    }
}

fn orthogonalize(r: &mut [f64], ortho: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in ortho {
            let c = linalg::dot(r, q);
            r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
        }
    }
}

/// A unit vector orthogonal to the orthonormal set `ortho`, scaled to
/// max-abs entry 1.
fn complement_direction(ortho: &[Vec<f64>], p: usize) -> Vec<f64> {
    let mut best = vec![0.0; p];
    let mut best_norm = -1.0;
    for i in 0..p {
        let mut r = vec![0.0; p];
        r[i] = 1.0;
        orthogonalize(&mut r, ortho);
        let n = linalg::norm2(&r);
        if n > best_norm {
            best_norm = n;
            best = r;
        }
    }
    let m = best.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    best.iter_mut().for_each(|x| *x /= m);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{fully_observed, parity, single_observation};

    #[test]
    fn parity_is_not_observable() {
        let r = check_o(&parity());
        assert_eq!(r.status, Status::FailsCertified);
        let Evidence::Observability { dimension, indistinguishable: Some(v), uniformly_observable, .. } = r.evidence else {
            panic!()
        };
        assert_eq!(dimension, 1);
        assert!(!uniformly_observable);
        assert!((v[0] + v[1]).abs() < 1e-15);
        assert!((v[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fully_observed_is_observable() {
        let p = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = check_o(&fully_observed(&p).unwrap());
        assert_eq!(r.status, Status::HoldsCertified);
        let Evidence::Observability { generators, generator_words, .. } = r.evidence else { panic!() };
        assert_eq!(generators[1], vec![0.9, 0.2]);
        assert_eq!(generator_words[1], vec!["y0".to_string()]);
    }

    #[test]
    fn single_state_is_observable() {
        let r = check_o(&single_observation(&Matrix::identity(1)).unwrap());
        assert_eq!(r.status, Status::HoldsCertified);
    }
}
