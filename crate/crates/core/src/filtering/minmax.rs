use rayon::prelude::*;

use super::{filter_final, FilterError};
use crate::linalg;
use crate::model::HmmModel;
use crate::rng::streams;

/// Pathwise gap between window-`m` proxies of the max- and min-filters.
///
/// One stationary path of length `horizon` is simulated. At each `k` in
/// `m..=horizon`, the filter is run over `y_{k−m+1..=k}` twice: from `λ`
/// (min-filter proxy) and from `δ_{x_{k−m}}` (max-filter proxy, which also
/// knows the signal at the start of the window). Returns the `l1` distances.
pub fn minmax_gap(model: &HmmModel, window: usize, horizon: usize, seed: u64) -> Result<Vec<f64>, FilterError> {
    if window == 0 || horizon < window {
        return Err(FilterError::InvalidArgument(format!(
            "need horizon >= window >= 1 (window {window}, horizon {horizon})"
        )));
    }
    let lambda = model.stationary();
    let path = super::simulate_stream(model, lambda, horizon, seed, streams::MINMAX);
    let p = model.num_states();
    (window..=horizon)
        .into_par_iter()
        .map(|k| {
            let obs = &path.y[k - window..k];
            let anchor = path.x[k - window];
            let pmin = filter_final(model, lambda, obs)?;
            let mut delta = vec![0.0; p];
            delta[anchor] = 1.0;
            let pmax = filter_final(model, &delta, obs)?;
            Ok(linalg::l1_distance(&pmax, &pmin))
        })
        .collect()
}
