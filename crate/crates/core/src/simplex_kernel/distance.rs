use serde::Serialize;

use super::AtomicMeasure;
use crate::linalg;
use crate::tolerances::EXACT_TRANSPORT_MAX_ATOMS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    Wasserstein,
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureDistance {
    pub value: f64,
    pub method: DistanceMethod,
}

/// Exact 1-Wasserstein distance when both supports have at most 64 atoms,
/// otherwise the moment comparison of [`moment_distance`].
pub fn measure_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> MeasureDistance {
    if a.len() <= EXACT_TRANSPORT_MAX_ATOMS && b.len() <= EXACT_TRANSPORT_MAX_ATOMS {
        MeasureDistance { value: wasserstein_exact(a, b), method: DistanceMethod::Wasserstein }
    } else {
        MeasureDistance { value: moment_distance(a, b), method: DistanceMethod::Moments }
    }
}

/// Max absolute difference over all coordinate moments of degree ≤ 2.
pub fn moment_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
    a.moments().iter().zip(b.moments()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Optimal transport cost between two atomic measures with ground metric
/// `½‖x − y‖₁` (total variation between the atom locations).
///
/// Successive shortest augmenting paths on the bipartite residual graph,
/// with Bellman-Ford since backward arcs carry negative cost.
pub fn wasserstein_exact(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
    let n = a.len();
    let m = b.len();
    let cost: Vec<f64> = a
        .atoms()
        .iter()
        .flat_map(|x| b.atoms().iter().map(move |y| 0.5 * linalg::l1_distance(&x.location, &y.location)))
        .collect();
    let mut supply: Vec<f64> = a.atoms().iter().map(|x| x.weight).collect();
    let mut demand: Vec<f64> = b.atoms().iter().map(|y| y.weight).collect();
    let mut flow = vec![0.0; n * m];
    const EPS: f64 = 1e-15;

    // Nodes 0..n are sources, n..n+m sinks.
    let cap = 4 * (n + m) * (n + m) + 16;
    for _ in 0..cap {
        let mut dist = vec![f64::INFINITY; n + m];
        let mut pred = vec![usize::MAX; n + m];
        for i in 0..n {
            if supply[i] > EPS {
                dist[i] = 0.0;
            }
        }
        for _ in 0..n + m {
            let mut changed = false;
            for i in 0..n {
                if dist[i].is_finite() {
                    for j in 0..m {
                        let d = dist[i] + cost[i * m + j];
                        if d < dist[n + j] - 1e-15 {
                            dist[n + j] = d;
                            pred[n + j] = i;
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..m {
                if dist[n + j].is_finite() {
                    for i in 0..n {
                        if flow[i * m + j] > EPS {
                            let d = dist[n + j] - cost[i * m + j];
                            if d < dist[i] - 1e-15 {
                                dist[i] = d;
                                pred[i] = n + j;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(sink) = (0..m)
            .filter(|&j| demand[j] > EPS && dist[n + j].is_finite())
            .min_by(|&x, &y| dist[n + x].total_cmp(&dist[n + y]))
        else {
            break;
        };
        // Walk back to the source, collecting the bottleneck.
        let mut amount = demand[sink];
        let mut node = n + sink;
        let mut path = Vec::new();
        loop {
            let prev = pred[node];
            if prev == usize::MAX {
                amount = amount.min(supply[node]);
                break;
            }
            path.push((prev, node));
            if node < n {
                amount = amount.min(flow[node * m + (prev - n)]);
            }
            node = prev;
            if path.len() > 2 * (n + m) {
                break;
            }
        }
        let source = node;
        for &(from, to) in &path {
            if to >= n {
                flow[from * m + (to - n)] += amount;
            } else {
                flow[to * m + (from - n)] -= amount;
            }
        }
        supply[source] -= amount;
        demand[sink] -= amount;
        if supply.iter().all(|&s| s <= EPS) || demand.iter().all(|&d| d <= EPS) {
            break;
        }
    }
    flow.iter().zip(&cost).map(|(f, c)| f.max(0.0) * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parity, SimplexVector};
    use crate::simplex_kernel::{dirac_at, spread, Atom};

    fn sv(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    fn equal_weights(points: &[[f64; 2]]) -> AtomicMeasure {
        let w = 1.0 / points.len() as f64;
        AtomicMeasure::new(points.iter().map(|p| Atom { location: sv(p), weight: w }).collect()).unwrap()
    }

    #[test]
    fn parity_distance_is_one_half() {
        let m = parity();
        let d = measure_distance(&dirac_at(m.stationary()), &spread(m.stationary()));
        assert_eq!(d.method, DistanceMethod::Wasserstein);
        assert_eq!(d.value, 0.5);
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let a = equal_weights(&[[0.1, 0.9], [0.4, 0.6], [0.8, 0.2]]);
        assert_eq!(wasserstein_exact(&a, &a), 0.0);
    }

    #[test]
    fn one_dimensional_matches_sorted_coupling() {
        // On a segment, the optimal coupling of equal-weight atoms is monotone.
        let a = equal_weights(&[[0.1, 0.9], [0.5, 0.5], [0.7, 0.3], [0.95, 0.05]]);
        let b = equal_weights(&[[0.0, 1.0], [0.2, 0.8], [0.6, 0.4], [0.65, 0.35]]);
        let expected = 0.25 * (0.1 + 0.3 + 0.1 + 0.3);
        assert!((wasserstein_exact(&a, &b) - expected).abs() < 1e-14);
        assert!((wasserstein_exact(&b, &a) - expected).abs() < 1e-14);
    }

    #[test]
    fn moment_fallback() {
        let m = parity();
        let d = moment_distance(&dirac_at(m.stationary()), &spread(m.stationary()));
        assert_eq!(d, 0.25);
    }
}
