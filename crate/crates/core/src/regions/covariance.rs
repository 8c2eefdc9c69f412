use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::numerics::{c, logdet_identity_plus, regularized_gram_inverse, CMatrix};

use super::sets::{Collection, UserSet};

/// MMSE covariance `Q_S = (P^{-1} I + H_{S^c}^H H_{S^c})^{-1}`, with
/// `H_{empty} = 0` so that `Q_[K] = P I`.
pub fn mmse_covariance(ch: &Channel, s: UserSet, p: f64) -> Result<CMatrix> {
    check_power(p)?;
    if s.is_empty() {
        return Err(Error::Contract("MMSE covariance needs a nonempty stream index".into()));
    }
    Ok(mmse_unchecked(ch, s, p))
}

pub(crate) fn mmse_unchecked(ch: &Channel, s: UserSet, p: f64) -> CMatrix {
    let others = s.complement(ch.users());
    regularized_gram_inverse(&ch.rows_of(others), ch.tx_antennas(), p)
}

/// `Q_S` summed over the members of a collection.
pub fn collection_covariance(ch: &Channel, m: &Collection, p: f64) -> Result<CMatrix> {
    check_power(p)?;
    let n = ch.tx_antennas();
    Ok(m.members().iter().fold(CMatrix::zeros(n, n), |acc, &s| acc + mmse_unchecked(ch, s, p)))
}

/// `C_S = log2 det(I + P H_S H_S^H)`, `C_{empty} = 0`.
pub fn capacity_term(ch: &Channel, s: UserSet, p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("P must be finite and nonnegative, got {p}")));
    }
    if s.is_empty() || p == 0.0 {
        return Ok(0.0);
    }
    let hs = ch.rows_of(s);
    logdet_identity_plus(&(&hs * hs.adjoint() * c(p, 0.0)))
}

/// `C_S` for every bitmask `S` of `[K]` (index 0 is the empty set).
pub fn all_capacity_terms(ch: &Channel, p: f64) -> Result<Vec<f64>> {
    (0..1usize << ch.users()).map(|b| capacity_term(ch, UserSet(b as u16), p)).collect()
}

pub(crate) fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("P must be finite and positive, got {p}")));
    }
    Ok(())
}

/// `H_k Q_S H_k^H` for every user `k` and stream index `S`, so that
/// collection terms reduce to sums of small blocks.
pub(crate) struct ReceivedCovariances {
    /// `blocks[k][bits]`; entry 0 unused.
    blocks: Vec<Vec<CMatrix>>,
}

impl ReceivedCovariances {
    pub(crate) fn new(ch: &Channel, p: f64) -> Self {
        let q: Vec<CMatrix> = std::iter::once(CMatrix::zeros(0, 0))
            .chain(UserSet::nonempty_subsets(ch.users()).map(|s| mmse_unchecked(ch, s, p)))
            .collect();
        Self::from_covariances(ch, &q)
    }

    /// `q[bits]` is `Q_S`; `q[0]` is ignored.
    pub(crate) fn from_covariances(ch: &Channel, q: &[CMatrix]) -> Self {
        let blocks = (0..ch.users())
            .map(|k| {
                let hk = ch.user_block(k);
                q.iter()
                    .enumerate()
                    .map(|(b, qs)| if b == 0 { CMatrix::zeros(hk.nrows(), hk.nrows()) } else { &hk * qs * hk.adjoint() })
                    .collect()
            })
            .collect();
        Self { blocks }
    }

    pub(crate) fn sum(&self, k: usize, sets: impl IntoIterator<Item = UserSet>) -> CMatrix {
        let n = self.blocks[k][0].nrows();
        sets.into_iter().fold(CMatrix::zeros(n, n), |acc, s| acc + &self.blocks[k][s.bits() as usize])
    }
}
