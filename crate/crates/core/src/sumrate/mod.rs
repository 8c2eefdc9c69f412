//! Sum rates of the rate-splitting scheme and the bounds it is compared to.

mod bounds;
mod three_user;

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::lp::{maximize, LinearProgram, LpStatus};
use crate::regions::{rs_constraints, RateConstraint, UserSet};

pub use bounds::{dpc_sum_capacity, gdof_slope, k_user_upper_bound, two_user_covariance_check, lp_only_sum_rate_bound};
pub use three_user::{three_user_closed_form, three_user_split_solution, three_user_terms, ThreeUserTerms};

/// Per-stream rates keyed by stream index.
pub type StreamRates = BTreeMap<UserSet, f64>;

#[derive(Debug, Clone)]
pub struct SumRateReport {
    pub channel_digest: String,
    pub p: f64,
    pub rs_lp_value: f64,
    pub closed_form_value: Option<f64>,
    pub upper_bound_value: Option<f64>,
    pub dpc_value: Option<f64>,
    /// Users kept active; the others are ignored (their channels removed).
    pub active_subset: UserSet,
    /// Optimal per-stream rates in the labels of the original channel.
    pub solution: StreamRates,
}

impl SumRateReport {
    pub fn to_json(&self) -> Value {
        let mut values = Map::new();
        values.insert("rs_lp".into(), json!(self.rs_lp_value));
        if let Some(v) = self.closed_form_value {
            values.insert("closed_form".into(), json!(v));
        }
        if let Some(v) = self.upper_bound_value {
            values.insert("upper_bound".into(), json!(v));
        }
        if let Some(v) = self.dpc_value {
            values.insert("dpc".into(), json!(v));
        }
        let solution: Map<String, Value> =
            self.solution.iter().map(|(s, r)| (s.bits().to_string(), json!(r))).collect();
        json!({
            "channel_digest": self.channel_digest,
            "P": self.p,
            "values": values,
            "solution": solution,
            "active_subset": self.active_subset.bits(),
        })
    }
}

/// Maximizes `sum_S weight(S) R_S` over the rows in `rows`, with only the
/// `active` streams as variables.
pub(crate) fn solve_streams(
    rows: &[RateConstraint],
    active: &[UserSet],
    weight: impl Fn(UserSet) -> f64,
) -> Result<(f64, StreamRates)> {
    if active.is_empty() {
        return Err(Error::Precondition("at least one active stream is required".into()));
    }
    let index: BTreeMap<UserSet, usize> = active.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut lp = LinearProgram::new(active.iter().map(|&s| weight(s)).collect());
    for row in rows {
        let mut coeffs = vec![0.0; active.len()];
        let mut any = false;
        for s in &row.streams {
            if let Some(&i) = index.get(s) {
                coeffs[i] = 1.0;
                any = true;
            }
        }
        if any {
            lp.push(coeffs, row.rhs);
        } else if row.rhs < -1e-9 {
            return Err(Error::Lp(LpStatus::Infeasible));
        }
    }
    let sol = maximize(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(sol.status));
    }
    let rates = active.iter().zip(&sol.solution).map(|(&s, &r)| (s, r)).collect();
    Ok((sol.value, rates))
}

fn all_streams(k_users: usize) -> Vec<UserSet> {
    UserSet::nonempty_subsets(k_users).collect()
}

/// LP optimum of `sum_S R_S` subject to the reduced constraint system.
pub fn rs_sum_rate(ch: &Channel, p: f64) -> Result<SumRateReport> {
    let rows = rs_constraints(ch, p)?;
    let (value, solution) = solve_streams(&rows, &all_streams(ch.users()), |_| 1.0)?;
    Ok(SumRateReport {
        channel_digest: ch.digest(),
        p,
        rs_lp_value: value,
        closed_form_value: None,
        upper_bound_value: None,
        dpc_value: None,
        active_subset: ch.all_users(),
        solution,
    })
}

/// Best [`rs_sum_rate`] over all nonempty subsets of active users.
///
/// Subsets are scanned from the largest bitmask down, so the full set wins
/// ties.
pub fn rs_sum_rate_best_subset(ch: &Channel, p: f64) -> Result<SumRateReport> {
    let mut best: Option<SumRateReport> = None;
    for bits in (1..=ch.all_users().bits()).rev() {
        let subset = UserSet(bits);
        let sub = ch.restrict(subset)?;
        let report = rs_sum_rate(&sub, p)?;
        if best.as_ref().is_some_and(|b| report.rs_lp_value <= b.rs_lp_value + 1e-12) {
            continue;
        }
        // map stream labels of the sub-channel back to the original users
        let users: Vec<usize> = subset.users().collect();
        let solution = report
            .solution
            .iter()
            .map(|(s, &r)| (UserSet::from_users(&s.users().map(|i| users[i]).collect::<Vec<_>>()), r))
            .collect();
        best = Some(SumRateReport { channel_digest: ch.digest(), active_subset: subset, solution, ..report });
    }
    Ok(best.expect("at least one user"))
}

/// Maximum of `sum_k w_k R_k` where user `k` collects any share of the
/// streams it decodes: equivalently `sum_S R_S max_{k in S} w_k`.
pub fn rs_weighted_max(ch: &Channel, p: f64, weights: &[f64]) -> Result<f64> {
    if weights.len() != ch.users() {
        return Err(Error::Contract(format!("{} weights for {} users", weights.len(), ch.users())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Precondition("weights must be nonnegative".into()));
    }
    let rows = rs_constraints(ch, p)?;
    let weight = |s: UserSet| s.users().map(|k| weights[k]).fold(0.0, f64::max);
    Ok(solve_streams(&rows, &all_streams(ch.users()), weight)?.0)
}

/// [`rs_sum_rate_best_subset`] plus, where defined, the three-user closed
/// form, the K-user upper bound and the DPC sum capacity.
pub fn full_report(ch: &Channel, p: f64) -> Result<SumRateReport> {
    let mut report = rs_sum_rate_best_subset(ch, p)?;
    if ch.users() == 3 {
        report.closed_form_value = Some(three_user_closed_form(ch, p)?);
    }
    if ch.users() >= 2 {
        report.upper_bound_value = Some(k_user_upper_bound(ch, p)?);
    }
    report.dpc_value = Some(dpc_sum_capacity(ch, p)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{pathological_three_user, rayleigh};
    use crate::numerics::identity;
    use crate::regions::{all_capacity_terms, mac_weighted_max};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn two_user_sum_rate_is_joint_capacity() {
        for seed in 0..10 {
            let ch = rayleigh(2, 2, seed).unwrap();
            let p = 100.0;
            let cap = all_capacity_terms(&ch, p).unwrap();
            let r = rs_sum_rate(&ch, p).unwrap();
            assert_abs_diff_eq!(r.rs_lp_value, cap[3].min(cap[1] + cap[2]), epsilon = 1e-8);
            let total: f64 = r.solution.values().sum();
            assert_abs_diff_eq!(total, r.rs_lp_value, epsilon = 1e-7);
            assert!(r.solution.values().all(|&v| v >= -1e-10));
            let best = rs_sum_rate_best_subset(&ch, p).unwrap();
            assert_abs_diff_eq!(best.rs_lp_value, r.rs_lp_value, epsilon = 1e-12);
            assert_eq!(best.active_subset, UserSet(3));
        }
    }

    #[test]
    fn vanishing_power() {
        let ch = rayleigh(3, 3, 1).unwrap();
        assert!(rs_sum_rate(&ch, 1e-12).unwrap().rs_lp_value.abs() < 1e-9);
    }

    #[test]
    fn single_user() {
        let ch = rayleigh(1, 3, 2).unwrap();
        let c1 = crate::regions::capacity_term(&ch, UserSet(1), 10.0).unwrap();
        assert_abs_diff_eq!(rs_sum_rate_best_subset(&ch, 10.0).unwrap().rs_lp_value, c1, epsilon = 1e-10);
    }

    #[test]
    fn best_subset_relabels_streams() {
        // user 2 (index 1) has a useless channel
        let mut h = identity(3);
        h[(1, 1)] = crate::numerics::c(1e-9, 0.0);
        let ch = Channel::miso(h).unwrap();
        let r = rs_sum_rate_best_subset(&ch, 100.0).unwrap();
        assert!(r.solution.keys().all(|s| s.is_subset_of(r.active_subset)));
        let total: f64 = r.solution.values().sum();
        assert_abs_diff_eq!(total, r.rs_lp_value, epsilon = 1e-7);
    }

    #[test]
    fn report_json_shape() {
        let ch = rayleigh(3, 3, 1).unwrap();
        let j = full_report(&ch, 100.0).unwrap().to_json();
        assert!(j["values"]["rs_lp"].is_f64());
        assert!(j["values"]["closed_form"].is_f64());
        assert!(j["values"]["upper_bound"].is_f64());
        assert_eq!(j["channel_digest"].as_str().unwrap().len(), 64);
        assert!(j["solution"].is_object());
    }

    #[test]
    fn pathological_gap_grows() {
        let points: Vec<(f64, f64)> = (0..=18)
            .map(|i| {
                let p = 10f64.powf(i as f64 / 2.0);
                let ch = pathological_three_user(p, 0.5).unwrap();
                let gap = dpc_sum_capacity(&ch, p).unwrap() - rs_sum_rate_best_subset(&ch, p).unwrap().rs_lp_value;
                (p, gap)
            })
            .collect();
        // RS pre-log is at most 3 - alpha/2, so the gap grows at least like (alpha/2) log P
        assert!(gdof_slope(&points).unwrap() > 0.2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn two_user_weighted_region_is_polymatroid(seed in any::<u64>(), w in prop::collection::vec(0.0f64..2.0, 2), p_db in 0.0f64..30.0) {
            let p = crate::db_to_linear(p_db);
            let ch = rayleigh(2, 2, seed).unwrap();
            let rs = rs_weighted_max(&ch, p, &w).unwrap();
            prop_assert!((rs - mac_weighted_max(&ch, p, &w).unwrap()).abs() < 1e-8);
        }

        #[test]
        fn sum_rate_monotone_in_power(seed in any::<u64>(), p_db in 0.0f64..30.0) {
            let ch = rayleigh(3, 3, seed).unwrap();
            let lo = rs_sum_rate(&ch, crate::db_to_linear(p_db)).unwrap().rs_lp_value;
            let hi = rs_sum_rate(&ch, crate::db_to_linear(p_db + 3.0)).unwrap().rs_lp_value;
            prop_assert!(hi >= lo - 1e-9);
        }
    }
}
