use crate::channel::Channel;
use crate::error::{Error, Result};

use super::covariance::capacity_term;
use super::sets::UserSet;

/// Maximum of `sum_k w_k R_k` over the dual-MAC polymatroid with rank
/// `C_S = log2 det(I + P H_S^H H_S)`.
///
/// Greedy: users sorted by weight (descending, ties by index) receive their
/// marginal rank in that order.
pub fn mac_weighted_max(ch: &Channel, p: f64, weights: &[f64]) -> Result<f64> {
    Ok(mac_greedy_point(ch, p, weights)?.iter().zip(weights).map(|(r, w)| r * w).sum())
}

/// The greedy vertex itself, indexed by user.
pub fn mac_greedy_point(ch: &Channel, p: f64, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != ch.users() {
        return Err(Error::Contract(format!("{} weights for {} users", weights.len(), ch.users())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Precondition("weights must be nonnegative".into()));
    }
    let mut order: Vec<usize> = (0..ch.users()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut rates = vec![0.0; ch.users()];
    let mut prefix = UserSet::EMPTY;
    let mut prev = 0.0;
    for k in order {
        prefix = prefix.with(k);
        let cur = capacity_term(ch, prefix, p)?;
        rates[k] = cur - prev;
        prev = cur;
    }
    Ok(rates)
}

/// `n_t log2 n_r`: bits per channel use separating the dual-MAC region from
/// the BC capacity region.
pub fn duality_gap_bound(nt: usize, nr: usize) -> Result<f64> {
    if nt == 0 || nr == 0 {
        return Err(Error::Precondition("antenna counts must be positive".into()));
    }
    Ok(nt as f64 * (nr as f64).log2())
}
