use rayon::prelude::*;
use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::numerics::{identity, logdet_identity_plus, regularized_gram_inverse, CMatrix};

use super::covariance::{check_power, ReceivedCovariances};
use super::sets::{enumerate_minimal_collections, Collection, UserSet};

/// `sum_{S in streams} R_S <= rhs` as seen by `pivot`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraint {
    pub pivot: usize,
    /// Stream indices entering with coefficient 1, in canonical order.
    pub streams: Vec<UserSet>,
    /// Bits per channel use.
    pub rhs: f64,
    /// The collection that generated this row.
    pub provenance: Collection,
}

impl RateConstraint {
    /// `sum_{S in streams} rates(S)`.
    pub fn lhs(&self, rates: impl Fn(UserSet) -> f64) -> f64 {
        self.streams.iter().map(|&s| rates(s)).sum()
    }
}

/// Reduced constraint system: one row per user `k` and minimal collection
/// `m` with pivot `k`; the row bounds the rates of `maximal_of(m)` by
/// `log2 det(I + H_k Q_m H_k^H)`.
///
/// Rows are ordered by pivot, then by enumeration order.
pub fn rs_constraints(ch: &Channel, p: f64) -> Result<Vec<RateConstraint>> {
    check_power(p)?;
    let k_users = ch.users();
    let per_user = (0..k_users)
        .map(|k| enumerate_minimal_collections(k, k_users))
        .collect::<Result<Vec<_>>>()?;
    let rx = ReceivedCovariances::new(ch, p);
    let jobs: Vec<&Collection> = per_user.iter().flatten().collect();
    jobs.par_iter()
        .map(|m| {
            let k = m.pivot();
            let rhs = logdet_identity_plus(&rx.sum(k, m.members().iter().copied()))?;
            Ok(RateConstraint { pivot: k, streams: m.maximal_of().members().to_vec(), rhs, provenance: (*m).clone() })
        })
        .collect()
}

/// Largest user count for the unreduced (exact) system.
pub const MAX_EXACT_USERS: usize = 4;

/// Per-stream powers `P_S` for the exact system.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSplit {
    /// `P_S = P / ((2^K - 1) M)`. Since `tr Q_S <= M P_S`, this always meets
    /// the sum-power constraint.
    Equal,
    /// `powers[bits - 1]` is `P_S`.
    Explicit(Vec<f64>),
}

impl PowerSplit {
    fn powers(&self, k_users: usize, m: usize, p: f64) -> Result<Vec<f64>> {
        let streams = (1usize << k_users) - 1;
        match self {
            PowerSplit::Equal => Ok(vec![p / (streams * m) as f64; streams]),
            PowerSplit::Explicit(v) => {
                if v.len() != streams {
                    return Err(Error::Contract(format!("{} stream powers given, {streams} expected", v.len())));
                }
                if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::Precondition("stream powers must be finite and nonnegative".into()));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Exact MAC constraints at each receiver with per-stream powers: for every
/// user `k` and every nonempty sub-collection `S_k` of `{S : k in S}`,
/// `sum_{S in S_k} R_S <= log2 det(I + (I + N_k)^{-1} sum_{S in S_k} H_k Q_S H_k^H)`
/// with `N_k = sum_{S' not containing k} H_k Q_S' H_k^H`.
pub fn exact_constraints(ch: &Channel, p: f64, split: &PowerSplit) -> Result<Vec<RateConstraint>> {
    check_power(p)?;
    let k_users = ch.users();
    if k_users > MAX_EXACT_USERS {
        return Err(Error::Capacity(format!(
            "the exact system has 2^(2^(K-1)) - 1 rows per user; K={k_users} exceeds the limit {MAX_EXACT_USERS}"
        )));
    }
    let m = ch.tx_antennas();
    let powers = split.powers(k_users, m, p)?;
    let mut q = vec![CMatrix::zeros(m, m)];
    for s in UserSet::nonempty_subsets(k_users) {
        let ps = powers[s.bits() as usize - 1];
        q.push(if ps == 0.0 {
            CMatrix::zeros(m, m)
        } else {
            regularized_gram_inverse(&ch.rows_of(s.complement(k_users)), m, ps)
        });
    }
    let total: f64 = q.iter().map(|qs| qs.trace().re).sum();
    if total > p + 1e-6 * p.max(1.0) {
        return Err(Error::Precondition(format!("stream covariances use power {total:.6} > P = {p}")));
    }
    let rx = ReceivedCovariances::from_covariances(ch, &q);
    let mut out = Vec::new();
    for k in 0..k_users {
        let own: Vec<UserSet> = UserSet::nonempty_subsets(k_users).filter(|s| s.contains(k)).collect();
        let others = UserSet::nonempty_subsets(k_users).filter(|s| !s.contains(k));
        let noise = identity(ch.rx_antennas()[k]) + rx.sum(k, others);
        let base = crate::numerics::logdet_hermitian_psd(&noise)?;
        for mask in 1u64..(1u64 << own.len()) {
            let mut streams: Vec<UserSet> =
                (0..own.len()).filter(|i| mask & (1 << i) != 0).map(|i| own[i]).collect();
            streams.sort_by(UserSet::canonical_cmp);
            let signal = rx.sum(k, streams.iter().copied());
            let rhs = (crate::numerics::logdet_hermitian_psd(&(&noise + signal))? - base).max(0.0);
            let provenance = Collection::new(k, streams.clone())?;
            out.push(RateConstraint { pivot: k, streams, rhs, provenance });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintRecord {
    /// 1-based user index.
    pub pivot: usize,
    pub streams: Vec<u16>,
    pub rhs_bits: f64,
    pub provenance: String,
}

impl From<&RateConstraint> for ConstraintRecord {
    fn from(r: &RateConstraint) -> Self {
        Self {
            pivot: r.pivot + 1,
            streams: r.streams.iter().map(|s| s.bits()).collect(),
            rhs_bits: r.rhs,
            provenance: r.provenance.to_string(),
        }
    }
}

pub fn constraints_to_json(rows: &[RateConstraint]) -> serde_json::Value {
    serde_json::to_value(rows.iter().map(ConstraintRecord::from).collect::<Vec<_>>())
        .expect("constraint records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::rayleigh;
    use crate::numerics::c;
    use crate::regions::covariance::{all_capacity_terms, capacity_term};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rhs_of(rows: &[RateConstraint], pivot: usize, provenance: &[UserSet]) -> f64 {
        rows.iter()
            .find(|r| r.pivot == pivot && r.provenance.members() == provenance)
            .map(|r| r.rhs)
            .unwrap()
    }

    #[test]
    fn two_user_rhs_are_capacity_differences() {
        for seed in 0..20 {
            let ch = rayleigh(2, 2, seed).unwrap();
            let p = 1000.0;
            let rows = rs_constraints(&ch, p).unwrap();
            assert_eq!(rows.len(), 4);
            let cap = all_capacity_terms(&ch, p).unwrap();
            let (u1, u2, u12) = (UserSet(1), UserSet(2), UserSet(3));
            assert_abs_diff_eq!(rhs_of(&rows, 0, &[u1]), cap[3] - cap[2], epsilon = 1e-8);
            assert_abs_diff_eq!(rhs_of(&rows, 1, &[u2]), cap[3] - cap[1], epsilon = 1e-8);
            assert_abs_diff_eq!(rhs_of(&rows, 0, &[u12]), cap[1], epsilon = 1e-8);
            assert_abs_diff_eq!(rhs_of(&rows, 1, &[u12]), cap[2], epsilon = 1e-8);
            let r = rows.iter().find(|r| r.pivot == 0 && r.provenance.members() == [u12]).unwrap();
            assert_eq!(r.streams, vec![u1, u12]);
        }
    }

    #[test]
    fn counts_and_tau_rows() {
        let ch = rayleigh(3, 3, 4).unwrap();
        let rows = rs_constraints(&ch, 100.0).unwrap();
        assert_eq!(rows.len(), 15);
        let taus = rows.iter().filter(|r| r.provenance.len() == 2).count();
        assert_eq!(taus, 3);
        assert!(rows.windows(2).all(|w| w[0].pivot <= w[1].pivot));
        for (k_users, want) in [(1, 1), (2, 4), (4, 76), (5, 835)] {
            let ch = rayleigh(k_users, k_users, 1).unwrap();
            assert_eq!(rs_constraints(&ch, 10.0).unwrap().len(), want);
        }
        assert!(matches!(rs_constraints(&rayleigh(7, 7, 1).unwrap(), 10.0), Err(Error::Capacity(_))));
    }

    #[test]
    fn six_users_count() {
        let ch = rayleigh(6, 6, 2).unwrap();
        assert_eq!(rs_constraints(&ch, 10.0).unwrap().len(), 6 * 7580);
    }

    #[test]
    fn vanishing_power_vanishing_rhs() {
        let ch = rayleigh(3, 3, 9).unwrap();
        let rows = rs_constraints(&ch, 1e-12).unwrap();
        assert!(rows.iter().all(|r| r.rhs.abs() < 1e-9));
    }

    #[test]
    fn json_export_shape() {
        let ch = rayleigh(2, 2, 0).unwrap();
        let json = constraints_to_json(&rs_constraints(&ch, 10.0).unwrap());
        let first = &json[0];
        assert_eq!(first["pivot"], 1);
        assert!(first["streams"].is_array());
        assert!(first["rhs_bits"].is_f64());
        assert!(first["provenance"].as_str().unwrap().starts_with("{{"));
    }

    #[test]
    fn exact_single_user() {
        let ch = rayleigh(1, 2, 3).unwrap();
        let p = 10.0;
        let rows = exact_constraints(&ch, p, &PowerSplit::Equal).unwrap();
        assert_eq!(rows.len(), 1);
        // Q_1 = (P/M) I with the equal split
        let h = ch.user_block(0);
        let want = logdet_identity_plus(&(&h * identity(2) * c(p / 2.0, 0.0) * h.adjoint())).unwrap();
        assert_abs_diff_eq!(rows[0].rhs, want, epsilon = 1e-10);
    }

    #[test]
    fn exact_zero_power_and_guards() {
        let ch = rayleigh(3, 3, 3).unwrap();
        let rows = exact_constraints(&ch, 10.0, &PowerSplit::Explicit(vec![0.0; 7])).unwrap();
        assert_eq!(rows.len(), 3 * 15);
        assert!(rows.iter().all(|r| r.rhs == 0.0));
        assert!(matches!(
            exact_constraints(&ch, 10.0, &PowerSplit::Explicit(vec![10.0; 7])),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(exact_constraints(&rayleigh(5, 5, 0).unwrap(), 10.0, &PowerSplit::Equal), Err(Error::Capacity(_))));
        assert_eq!(exact_constraints(&rayleigh(4, 4, 0).unwrap(), 10.0, &PowerSplit::Equal).unwrap().len(), 4 * 255);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn tau_bound(seed in any::<u64>(), p_db in 0.0f64..40.0) {
            let p = crate::db_to_linear(p_db);
            let ch = rayleigh(3, 3, seed).unwrap();
            for r in rs_constraints(&ch, p).unwrap() {
                let ck = capacity_term(&ch, UserSet::singleton(r.pivot), p).unwrap();
                prop_assert!(r.rhs <= ck + (r.provenance.len() as f64).log2() + 1e-8);
            }
        }

        #[test]
        fn exact_rows_are_dominated(seed in any::<u64>(), p_db in 0.0f64..30.0) {
            // exact rows use less power and see interference: never above the reduced row
            // of the same streams' minimal collection
            let p = crate::db_to_linear(p_db);
            let ch = rayleigh(2, 2, seed).unwrap();
            let approx = rs_constraints(&ch, p).unwrap();
            let exact = exact_constraints(&ch, p, &PowerSplit::Equal).unwrap();
            for e in &exact {
                let minimal = e.provenance.reduce_to_minimal();
                let a = approx.iter().find(|a| a.pivot == e.pivot && a.provenance == minimal).unwrap();
                let gap = (e.streams.len() as f64).log2();
                prop_assert!(e.rhs <= a.rhs + gap + 1e-9);
            }
        }
    }
}
