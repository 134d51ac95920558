use std::collections::{HashSet, VecDeque};

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::linalg::Matrix;
use crate::model::HmmModel;

/// The support of a square nonnegative matrix, one bitset per row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportPattern {
    dim: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SupportPattern {
    pub fn empty(dim: usize) -> Self {
        let words = dim.div_ceil(64).max(1);
        SupportPattern { dim, words, bits: vec![0; dim * words] }
    }

    pub fn of(m: &Matrix) -> Self {
        let mut s = Self::empty(m.rows());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m.get(i, j) > 0.0 {
                    s.set(i, j);
                }
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Support of the product `A·B` of matrices with supports `self`, `other`.
    pub fn compose(&self, other: &SupportPattern) -> SupportPattern {
        let mut out = Self::empty(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                if self.get(i, k) {
                    for (o, w) in out.bits[i * self.words..(i + 1) * self.words].iter_mut().zip(other.row(k)) {
                        *o |= w;
                    }
                }
            }
        }
        out
    }

    /// `M_ij > 0` and `M_kl > 0` imply `M_il > 0` and `M_kj > 0`; equivalently
    /// all nonzero rows coincide.
    pub fn is_subrectangular(&self) -> bool {
        let mut nonzero = (0..self.dim).map(|i| self.row(i)).filter(|r| r.iter().any(|&w| w != 0));
        match nonzero.next() {
            None => true,
            Some(first) => nonzero.all(|r| r == first),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) as u8).collect()).collect()
    }
}

impl Serialize for SupportPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.to_rows() {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

pub(crate) enum PatternSearch {
    Found { word: Vec<usize>, pattern: SupportPattern, explored: usize },
    Exhausted { explored: usize },
    Budget { explored: usize },
}

/// Breadth-first search of the monoid generated by the supports of the
/// `M(y)`, for a nonzero subrectangular element. Words are shortest first.
pub(crate) fn search_subrectangular(model: &HmmModel, max_patterns: usize) -> PatternSearch {
    let gens: Vec<SupportPattern> = model.obs_matrices().iter().map(SupportPattern::of).collect();
    let mut seen: HashSet<SupportPattern> = HashSet::new();
    let mut queue: VecDeque<(SupportPattern, Vec<usize>)> = VecDeque::new();
    for (y, g) in gens.iter().enumerate() {
        if seen.insert(g.clone()) {
            if !g.is_zero() && g.is_subrectangular() {
                return PatternSearch::Found { word: vec![y], pattern: g.clone(), explored: seen.len() };
            }
            queue.push_back((g.clone(), vec![y]));
        }
    }
    while let Some((pat, word)) = queue.pop_front() {
        for (y, g) in gens.iter().enumerate() {
            let next = pat.compose(g);
            if seen.contains(&next) {
                continue;
            }
            let mut w = word.clone();
            w.push(y);
            if !next.is_zero() && next.is_subrectangular() {
                return PatternSearch::Found { word: w, pattern: next, explored: seen.len() + 1 };
            }
            seen.insert(next.clone());
            if seen.len() > max_patterns {
                return PatternSearch::Budget { explored: seen.len() };
            }
            queue.push_back((next, w));
        }
    }
    PatternSearch::Exhausted { explored: seen.len() }
}
