use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::KernelError;
use crate::linalg;
use crate::model::SimplexVector;
use crate::tolerances::{ATOM_MERGE_TOL, HASH_ROUNDING, SUM_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: SimplexVector,
    pub weight: f64,
}

/// A finitely supported probability measure on the simplex.
///
/// Atoms are kept in canonical form: positive weights, no two locations
/// within the merge tolerance, sorted lexicographically by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<RawMeasure> for AtomicMeasure {
    type Error = KernelError;

    fn try_from(raw: RawMeasure) -> Result<Self, KernelError> {
        AtomicMeasure::new(raw.atoms)
    }
}

impl AtomicMeasure {
    /// Validates weights (positive, summing to one within `1e-12`) and
    /// dimensions, then merges atoms closer than `1e-9`.
    pub fn new(atoms: Vec<Atom>) -> Result<Self, KernelError> {
        let dim = atoms.first().ok_or_else(|| KernelError::InvalidMeasure("no atoms".into()))?.location.dim();
        if let Some(a) = atoms.iter().find(|a| a.location.dim() != dim) {
            return Err(KernelError::DimensionMismatch { expected: dim, found: a.location.dim() });
        }
        if let Some(a) = atoms.iter().find(|a| !(a.weight > 0.0 && a.weight.is_finite())) {
            return Err(KernelError::InvalidMeasure(format!("weight {} is not positive", a.weight)));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(KernelError::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self::canonical(atoms, ATOM_MERGE_TOL))
    }

    /// Merges, drops zero weights and sorts. Weights are taken as given.
    pub(crate) fn canonical(atoms: Vec<Atom>, merge_tol: f64) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.weight > 0.0).collect();
        if atoms.len() > 1 {
            atoms = merge_close(atoms, merge_tol);
        }
        atoms.sort_by(|a, b| lex_cmp(&a.location, &b.location));
        AtomicMeasure { atoms }
    }

    /// Convex combination `Σ c_k · measures[k]`.
    pub fn mixture(parts: &[(f64, &AtomicMeasure)], merge_tol: f64) -> Self {
        let atoms = parts
            .iter()
            .flat_map(|(c, m)| m.atoms.iter().map(move |a| Atom { location: a.location.clone(), weight: c * a.weight }))
            .collect();
        let mut m = Self::canonical(atoms, merge_tol);
        m.renormalize();
        m
    }

    pub(crate) fn renormalize(&mut self) {
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if total != 1.0 {
            self.atoms.iter_mut().for_each(|a| a.weight /= total);
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].location.dim()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ f dM`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(&a.location)).sum()
    }

    /// All moments of degree ≤ 2 of the coordinates: `E[x_i]` for each `i`,
    /// then `E[x_i x_j]` for `i ≤ j`.
    pub fn moments(&self) -> Vec<f64> {
        let p = self.dim();
        let mut out = vec![0.0; p + p * (p + 1) / 2];
        for a in &self.atoms {
            accumulate_moments(&mut out, &a.location, a.weight);
        }
        out
    }

    /// Hash of the tolerance-rounded atoms; equal for measures that agree
    /// up to rounding noise.
    pub fn rounded_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.atoms.len().hash(&mut h);
        for a in &self.atoms {
            for x in a.location.iter() {
                ((x / HASH_ROUNDING).round() as i64).hash(&mut h);
            }
            ((a.weight / HASH_ROUNDING).round() as i64).hash(&mut h);
        }
        h.finish()
    }
}

pub(crate) fn accumulate_moments(out: &mut [f64], x: &[f64], w: f64) {
    let p = x.len();
    for i in 0..p {
        out[i] += w * x[i];
    }
    let mut k = p;
    for i in 0..p {
        for j in i..p {
            out[k] += w * x[i] * x[j];
            k += 1;
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Merges atoms whose locations are within `tol` in `l1`. Candidates are
/// found with a sweep along a fixed generic projection; a merged cluster
/// keeps the location of its heaviest atom.
fn merge_close(mut atoms: Vec<Atom>, tol: f64) -> Vec<Atom> {
    let p = atoms[0].location.dim();
    let coeffs: Vec<f64> = (0..p).map(|i| 0.5 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
    let proj = |a: &Atom| linalg::dot(&a.location, &coeffs);
    atoms.sort_by(|a, b| proj(a).total_cmp(&proj(b)).then_with(|| lex_cmp(&a.location, &b.location)));
    let keys: Vec<f64> = atoms.iter().map(proj).collect();
    let mut taken = vec![false; atoms.len()];
    let mut out = Vec::with_capacity(atoms.len());
    for i in 0..atoms.len() {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        let mut weight = atoms[i].weight;
        let mut best = i;
        let mut j = i + 1;
        while j < atoms.len() && keys[j] - keys[i] <= tol {
            if !taken[j] && linalg::l1_distance(&atoms[i].location, &atoms[j].location) <= tol {
                taken[j] = true;
                weight += atoms[j].weight;
                if atoms[j].weight > atoms[best].weight {
                    best = j;
                }
            }
            j += 1;
        }
        out.push(Atom { location: atoms[best].location.clone(), weight });
    }
    out
}

/// The point mass at `mu`.
pub fn dirac_at(mu: &SimplexVector) -> AtomicMeasure {
    AtomicMeasure { atoms: vec![Atom { location: mu.clone(), weight: 1.0 }] }
}

/// Mass `μ_x` at each vertex `δ_x`.
pub fn spread(mu: &SimplexVector) -> AtomicMeasure {
    let p = mu.dim();
    let atoms = mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, &w)| Atom { location: SimplexVector::point_mass(p, x), weight: w })
        .collect();
    AtomicMeasure::canonical(atoms, 0.0)
}

/// Mean location `∫ μ M(dμ)`.
pub fn barycenter(measure: &AtomicMeasure) -> SimplexVector {
    let mut b = vec![0.0; measure.dim()];
    for a in measure.atoms() {
        for (bi, x) in b.iter_mut().zip(a.location.iter()) {
            *bi += a.weight * x;
        }
    }
    SimplexVector::from_unnormalized(b).expect("measure has mass")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dirac_and_spread() {
        let lambda = sv(&[0.5, 0.5]);
        let d = dirac_at(&lambda);
        assert_eq!(d.len(), 1);
        assert_eq!(d.atoms()[0].location, lambda);
        let s = spread(&lambda);
        assert_eq!(s.len(), 2);
        assert_eq!(s.atoms()[0].location.as_slice(), &[0.0, 1.0]);
        assert_eq!(s.atoms()[1].location.as_slice(), &[1.0, 0.0]);
        assert_eq!(barycenter(&s), lambda);
        let v = SimplexVector::point_mass(3, 1);
        assert_eq!(spread(&v), dirac_at(&v));
    }

    #[test]
    fn merging_collapses_near_duplicates() {
        let m = AtomicMeasure::new(vec![
            Atom { location: sv(&[0.3, 0.7]), weight: 0.25 },
            Atom { location: sv(&[0.3 + 1e-12, 0.7 - 1e-12]), weight: 0.5 },
            Atom { location: sv(&[0.6, 0.4]), weight: 0.25 },
        ])
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.atoms()[0].weight, 0.75);
        assert_eq!(m.atoms()[0].location.as_slice(), &[0.3 + 1e-12, 0.7 - 1e-12]);
    }

    #[test]
    fn invalid_measures() {
        assert!(AtomicMeasure::new(vec![]).is_err());
        assert!(AtomicMeasure::new(vec![Atom { location: sv(&[1.0]), weight: 0.5 }]).is_err());
        assert!(AtomicMeasure::new(vec![
            Atom { location: sv(&[1.0]), weight: 0.5 },
            Atom { location: sv(&[0.5, 0.5]), weight: 0.5 },
        ])
        .is_err());
    }

    #[test]
    fn moments_of_vertex_measure() {
        let s = spread(&sv(&[0.5, 0.5]));
        // E[x0], E[x1], E[x0²], E[x0 x1], E[x1²]
        assert_eq!(s.moments(), vec![0.5, 0.5, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn json_round_trip_and_schema() {
        let s = spread(&sv(&[0.25, 0.75]));
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"atoms":[{"location":[0.0,1.0],"weight":0.75},{"location":[1.0,0.0],"weight":0.25}]}"#);
        let back: AtomicMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<AtomicMeasure>(r#"{"atoms":[{"location":[1.0],"weight":0.5}]}"#).is_err());
    }
}
