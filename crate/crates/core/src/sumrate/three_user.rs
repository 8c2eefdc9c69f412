use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::lp::feasible_with_tol;
use crate::numerics::logdet_identity_plus;
use crate::regions::{all_capacity_terms, rs_constraints, ReceivedCovariances, UserSet};

use super::StreamRates;

/// Capacity terms and the pair-collection terms of a three-user channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeUserTerms {
    /// `c[bits]` is `C_S`; `c[0] = 0`.
    pub c: [f64; 8],
    /// `tau[k] = log2 det(I + H_k (Q_{k,i} + Q_{k,j}) H_k^H)`.
    pub tau: [f64; 3],
}

impl ThreeUserTerms {
    pub fn cap(&self, users: &[usize]) -> f64 {
        self.c[UserSet::from_users(users).bits() as usize]
    }

    /// `(C_1 + C_2 + C_3 - C_12 - C_13 - C_23 + 3 C_123) / 2 + min_k (tau_k - C_k) / 2`.
    pub fn second_argument(&self) -> f64 {
        let c = &self.c;
        let slack = (0..3).map(|k| self.tau[k] - c[1 << k]).fold(f64::INFINITY, f64::min);
        (c[1] + c[2] + c[4] - c[3] - c[5] - c[6] + 3.0 * c[7]) / 2.0 + slack / 2.0
    }

    /// `min{C_123, second_argument}`.
    pub fn min_term(&self) -> f64 {
        self.c[7].min(self.second_argument())
    }

    /// `max{C_12, C_13, C_23, min_term}`.
    pub fn closed_form(&self) -> f64 {
        self.c[3].max(self.c[5]).max(self.c[6]).max(self.min_term())
    }
}

fn require_three(ch: &Channel) -> Result<()> {
    if ch.users() != 3 {
        return Err(Error::Precondition(format!("expected a three-user channel, got K={}", ch.users())));
    }
    Ok(())
}

pub fn three_user_terms(ch: &Channel, p: f64) -> Result<ThreeUserTerms> {
    require_three(ch)?;
    let caps = all_capacity_terms(ch, p)?;
    let rx = ReceivedCovariances::new(ch, p);
    let mut tau = [0.0; 3];
    for (k, t) in tau.iter_mut().enumerate() {
        let pairs = (0..3).filter(|&j| j != k).map(|j| UserSet::from_users(&[k, j]));
        *t = logdet_identity_plus(&rx.sum(k, pairs))?;
    }
    let mut c = [0.0; 8];
    c.copy_from_slice(&caps);
    Ok(ThreeUserTerms { c, tau })
}

/// `max{C_12, C_13, C_23, min{C_123, second argument}}`.
pub fn three_user_closed_form(ch: &Channel, p: f64) -> Result<f64> {
    Ok(three_user_terms(ch, p)?.closed_form())
}

/// Explicit seven-stream rate assignment attaining the min-term.
///
/// Users are relabelled so that the first one minimizes `tau_k - C_k`, the
/// rates are computed in that labelling and mapped back. Rates in
/// `[-1e-9, 0)` are clamped to zero; anything more negative is an error, as
/// is an assignment that violates the reduced constraint system by more
/// than `1e-7`.
pub fn three_user_split_solution(ch: &Channel, p: f64) -> Result<StreamRates> {
    let t = three_user_terms(ch, p)?;
    let first = (0..3)
        .min_by(|&a, &b| (t.tau[a] - t.c[1 << a]).total_cmp(&(t.tau[b] - t.c[1 << b])))
        .expect("three users");
    let mut perm = vec![first];
    perm.extend((0..3).filter(|&k| k != first));
    // cap(&[a, b]) in the relabelled users
    let cap = |users: &[usize]| t.cap(&users.iter().map(|&u| perm[u]).collect::<Vec<_>>());
    let (c1, c2, c3) = (cap(&[0]), cap(&[1]), cap(&[2]));
    let (c12, c13, c23) = (cap(&[0, 1]), cap(&[0, 2]), cap(&[1, 2]));
    let c123 = cap(&[0, 1, 2]);
    let tau1 = t.tau[first];

    let r1 = c123 - c23;
    let r2 = c123 - c13;
    let r3 = c123 - c12;
    let (r12, r13, r23, r123);
    if tau1 + c2 + c3 + c123 > c12 + c13 + c23 {
        r12 = c23 - c3 - (c123 - c13);
        r13 = c12 - c2 - (c123 - c23);
        r23 = c13 - c1 - (c123 - c12);
        r123 = c1 + c2 + c3 + c123 - c12 - c13 - c23;
    } else {
        r12 = (tau1 + c2 + c13 + c23 - c3 - c12 - c123) / 2.0;
        r13 = (tau1 + c3 + c12 + c23 - c2 - c13 - c123) / 2.0;
        let shared = (c2 + c3 + c12 + c13 - tau1 - c23 - c123) / 2.0;
        r123 = (c1 - tau1).min(shared);
        r23 = shared - r123;
    }

    let relabel = |users: &[usize]| UserSet::from_users(&users.iter().map(|&u| perm[u]).collect::<Vec<_>>());
    let assignment = [
        (relabel(&[0]), r1),
        (relabel(&[1]), r2),
        (relabel(&[2]), r3),
        (relabel(&[0, 1]), r12),
        (relabel(&[0, 2]), r13),
        (relabel(&[1, 2]), r23),
        (relabel(&[0, 1, 2]), r123),
    ];
    let mut rates = StreamRates::new();
    for (s, r) in assignment {
        if r < -1e-9 {
            return Err(Error::NegativeRate { stream: s, value: r });
        }
        rates.insert(s, r.max(0.0));
    }

    let rows = rs_constraints(ch, p)?;
    let point: Vec<f64> = UserSet::nonempty_subsets(3).map(|s| rates[&s]).collect();
    let lp_rows: Vec<crate::lp::LinearConstraint> = rows
        .iter()
        .map(|r| {
            let coeffs = UserSet::nonempty_subsets(3).map(|s| if r.streams.contains(&s) { 1.0 } else { 0.0 }).collect();
            crate::lp::LinearConstraint::new(coeffs, r.rhs)
        })
        .collect();
    if !feasible_with_tol(&lp_rows, &point, 1e-7)? {
        let worst = rows
            .iter()
            .map(|r| r.lhs(|s| rates[&s]) - r.rhs)
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Numerical(format!("split assignment violates a constraint by {worst:e}")));
    }
    Ok(rates)
}
