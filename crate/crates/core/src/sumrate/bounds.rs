use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::numerics::{eigen_range, logdet_identity_plus, CMatrix};
use crate::regions::{capacity_term, ReceivedCovariances, UserSet};

/// Analytical upper bound on the reduced-system sum rate:
///
/// `sum_i ( l_i^(K) / (K-1) + sum_{k=1}^{K-2} l_i^(k) / (k(k+1)) )
///   + min_m ( l_m^(K-1) - l_m^(K) ) / (K-1)`
///
/// where `l_i^(k)` is the collection term of `{S : |S| = k, i in S}`.
pub fn k_user_upper_bound(ch: &Channel, p: f64) -> Result<f64> {
    let k_users = ch.users();
    if k_users < 2 {
        return Err(Error::Precondition("the K-user bound needs K >= 2".into()));
    }
    let rx = ReceivedCovariances::new(ch, p);
    // l[i][k-1]
    let l = (0..k_users)
        .map(|i| {
            (1..=k_users)
                .map(|k| {
                    let sets = UserSet::nonempty_subsets(k_users).filter(|s| s.len() == k && s.contains(i));
                    logdet_identity_plus(&rx.sum(i, sets))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let kf = (k_users - 1) as f64;
    let mut total = 0.0;
    for li in &l {
        total += li[k_users - 1] / kf;
        for k in 1..=k_users.saturating_sub(2) {
            total += li[k - 1] / (k * (k + 1)) as f64;
        }
    }
    let tail = l.iter().map(|li| li[k_users - 2] - li[k_users - 1]).fold(f64::INFINITY, f64::min);
    Ok(total + tail / kf)
}

/// Sum-rate bound for linear precoding without rate splitting on a two-user
/// MISO channel with two transmit antennas:
/// `max{ log2(1 + P|h1|^2), log2(1 + P|h2|^2), log2(1 + beta P^2 det(H H^H)) }`,
/// `beta = min{(1 - rho^2) / rho^2, 1}`.
pub fn lp_only_sum_rate_bound(ch: &Channel, p: f64) -> Result<f64> {
    if ch.users() != 2 || !ch.is_miso() || ch.tx_antennas() != 2 {
        return Err(Error::Precondition("expected a two-user MISO channel with M = 2".into()));
    }
    if !(p >= 0.0) {
        return Err(Error::Precondition(format!("P must be nonnegative, got {p}")));
    }
    let h = ch.matrix();
    let n1: f64 = h.row(0).iter().map(|z| z.norm_sqr()).sum();
    let n2: f64 = h.row(1).iter().map(|z| z.norm_sqr()).sum();
    let singles = (1.0 + p * n1).log2().max((1.0 + p * n2).log2());
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(singles);
    }
    // det(H H^H) = |h1|^2 |h2|^2 - |h1 h2^H|^2 = |h1|^2 |h2|^2 (1 - rho^2)
    let det = (h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)]).norm_sqr();
    let one_minus_rho2 = (det / (n1 * n2)).clamp(0.0, 1.0);
    let rho2 = 1.0 - one_minus_rho2;
    let beta = if rho2 == 0.0 { 1.0 } else { (one_minus_rho2 / rho2).min(1.0) };
    Ok(singles.max((1.0 + beta * p * p * det).log2()))
}

/// `C_[K] = log2 det(I + P H^H H)`.
pub fn dpc_sum_capacity(ch: &Channel, p: f64) -> Result<f64> {
    capacity_term(ch, ch.all_users(), p)
}

/// Least-squares slope of rate against `log2 P` over the upper half of the
/// sampled `log2 P` range.
pub fn gdof_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(p, r)| !(p > 0.0) || !r.is_finite()) {
        return Err(Error::Precondition("powers must be positive and rates finite".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(p, r)| (p.log2(), r)).collect();
    let lo = logs.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let hi = logs.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo) * std::f64::consts::LOG10_2 < 4.0 - 1e-9 {
        return Err(Error::Precondition("P must span at least 4 decades".into()));
    }
    let mid = (lo + hi) / 2.0;
    let top: Vec<(f64, f64)> = logs.into_iter().filter(|x| x.0 >= mid).collect();
    if top.len() < 2 {
        return Err(Error::Precondition("need at least 2 points in the upper half of the range".into()));
    }
    let n = top.len() as f64;
    let mx = top.iter().map(|x| x.0).sum::<f64>() / n;
    let my = top.iter().map(|x| x.1).sum::<f64>() / n;
    let sxy: f64 = top.iter().map(|x| (x.0 - mx) * (x.1 - my)).sum();
    let sxx: f64 = top.iter().map(|x| (x.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Checks both inequalities for `h2 = [f, g]` and PSD `2 x 2` covariances:
///
/// `Q1(1,1) / (1 + h2 Q1 h2^H) <= 2 min{2/|f|^2 + 2 (|g|^2/|f|^2) l1, l1}`
/// and `h2 Q2 h2^H / (1 + Q2(1,1)) <= 2|f|^2 + 2|g|^2 l2`,
/// with `l_i` the largest eigenvalue of `Q_i`.
pub fn two_user_covariance_check(f: num_complex::Complex64, g: num_complex::Complex64, q1: &CMatrix, q2: &CMatrix) -> Result<bool> {
    for q in [q1, q2] {
        if q.shape() != (2, 2) || !crate::numerics::is_hermitian(q) {
            return Err(Error::Contract("covariances must be Hermitian 2x2".into()));
        }
        let (lo, hi) = eigen_range(q);
        if lo < -1e-12 * hi.abs().max(1.0) {
            return Err(Error::NegativeEigenvalue { eigenvalue: lo });
        }
    }
    let quad = |q: &CMatrix| -> f64 {
        let v = [f, g];
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i] * q[(i, j)] * v[j].conj();
            }
        }
        acc.re
    };
    let (f2, g2) = (f.norm_sqr(), g.norm_sqr());
    let l1 = eigen_range(q1).1.max(0.0);
    let l2 = eigen_range(q2).1.max(0.0);
    let slack = 1e-12;

    let lhs_a = q1[(0, 0)].re / (1.0 + quad(q1));
    let rhs_a = if f2 > 0.0 { 2.0 * (2.0 / f2 + 2.0 * g2 / f2 * l1).min(l1) } else { 2.0 * l1 };
    let lhs_b = quad(q2) / (1.0 + q2[(0, 0)].re);
    let rhs_b = 2.0 * f2 + 2.0 * g2 * l2;
    Ok(lhs_a <= rhs_a * (1.0 + slack) + slack && lhs_b <= rhs_b * (1.0 + slack) + slack)
}
