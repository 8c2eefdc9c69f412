//! Stream elimination and stream ordering from the partitioned
//! pseudoinverse of the channel.
//!
//! For a proper user subset `I`, `W_I = H^+_{:,I} H_I` uses the columns of
//! the pseudoinverse of the whole channel. When `H_I W_I = H_I` and
//! `H_{I^c} W_I = 0`, `W_I` separates the users in `I` from the rest, and
//! any stream decoded on both sides of the split costs at most
//! `log2 ||W_I||_F^2` bits when dropped.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::numerics::{frobenius, frobenius_sq, pseudo_inverse, CMatrix, DEFAULT_RANK_TOL};
use crate::regions::{rs_constraints, UserSet};
use crate::sumrate::solve_streams;

/// Default relative residual for accepting a splitter.
pub const DEFAULT_SPLIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct WMatrixResult {
    pub subset: UserSet,
    pub solvable: bool,
    /// `||W||_F^2`, or `+inf` when the split conditions fail.
    pub norm_sq: f64,
    pub w: Option<CMatrix>,
}

/// Pseudoinverse of the channel, computed once and sliced per subset.
pub struct Splitter<'a> {
    ch: &'a Channel,
    pinv: CMatrix,
    tol: f64,
}

impl<'a> Splitter<'a> {
    pub fn new(ch: &'a Channel, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self { ch, pinv: pseudo_inverse(ch.matrix(), DEFAULT_RANK_TOL)?, tol })
    }

    pub fn w_matrix(&self, subset: UserSet) -> Result<WMatrixResult> {
        let all = self.ch.all_users();
        if subset.is_empty() || subset == all || !subset.is_subset_of(all) {
            return Err(Error::Precondition(format!("split set {subset} must be a proper nonempty subset of the users")));
        }
        let rows = self.ch.row_indices(subset);
        let h = self.ch.matrix();
        let h_i = h.select_rows(rows.iter());
        let w = self.pinv.select_columns(rows.iter()) * &h_i;
        let h_rest = self.ch.rows_of(subset.complement(self.ch.users()));
        let keep = frobenius(&(&h_i * &w - &h_i)) <= self.tol * frobenius(&h_i);
        let null = frobenius(&(&h_rest * &w)) <= self.tol * frobenius(h);
        if keep && null {
            Ok(WMatrixResult { subset, solvable: true, norm_sq: frobenius_sq(&w), w: Some(w) })
        } else {
            Ok(WMatrixResult { subset, solvable: false, norm_sq: f64::INFINITY, w: None })
        }
    }

    /// `W_I` for every proper nonempty `I`, in increasing bitmask order.
    pub fn all(&self) -> Result<Vec<WMatrixResult>> {
        let full = self.ch.all_users().bits();
        (1..full).into_par_iter().map(|b| self.w_matrix(UserSet(b))).collect()
    }
}

pub fn w_matrix(ch: &Channel, subset: UserSet, tol: f64) -> Result<WMatrixResult> {
    Splitter::new(ch, tol)?.w_matrix(subset)
}

/// `I` straddles `S` when `S` has users on both sides of the split.
fn straddles(split: UserSet, stream: UserSet) -> bool {
    !stream.intersection(split).is_empty() && !stream.minus(split).is_empty()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub threshold: f64,
    /// Remaining streams in increasing bitmask order.
    pub surviving: Vec<UserSet>,
    /// Number of split sets `I` examined (`2^K - 2`).
    pub examined: usize,
}

impl Elimination {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": 1,
            "threshold": finite_or_inf(self.threshold),
            "surviving": self.surviving.iter().map(|s| s.bits()).collect::<Vec<_>>(),
        })
    }
}

/// Starts from all `2^K - 1` streams and, for each solvable `I` with
/// `||W_I||_F^2 <= c`, removes every stream straddling `I`.
pub fn eliminate(ch: &Channel, c: f64, tol: f64) -> Result<Elimination> {
    if !(c >= 0.0) {
        return Err(Error::Precondition(format!("threshold must be nonnegative, got {c}")));
    }
    let splits = Splitter::new(ch, tol)?.all()?;
    let mut alive: Vec<UserSet> = UserSet::nonempty_subsets(ch.users()).collect();
    for split in splits.iter().filter(|w| w.solvable && w.norm_sq <= c) {
        alive.retain(|&s| !straddles(split.subset, s));
    }
    Ok(Elimination { threshold: c, surviving: alive, examined: splits.len() })
}

/// `c_S = min { ||W_I||_F^2 : I straddles S }`, `+inf` if no straddling
/// split is solvable.
pub fn min_threshold(ch: &Channel, streams: &[UserSet], tol: f64) -> Result<BTreeMap<UserSet, f64>> {
    if let Some(s) = streams.iter().find(|s| s.len() < 2) {
        return Err(Error::Precondition(format!("stream {s} is private; thresholds need |S| >= 2")));
    }
    let splits = Splitter::new(ch, tol)?.all()?;
    Ok(thresholds_from(&splits, streams))
}

fn thresholds_from(splits: &[WMatrixResult], streams: &[UserSet]) -> BTreeMap<UserSet, f64> {
    streams
        .iter()
        .map(|&s| {
            let c = splits
                .iter()
                .filter(|w| straddles(w.subset, s))
                .map(|w| w.norm_sq)
                .fold(f64::INFINITY, f64::min);
            (s, c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedStream {
    pub stream: UserSet,
    pub c_value: f64,
    pub randomized_c: f64,
}

/// Common streams by decreasing (randomized) threshold. Private streams are
/// not listed; they always come first.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOrdering {
    pub users: usize,
    pub entries: Vec<OrderedStream>,
    pub sigma: f64,
    pub seed: u64,
}

impl StreamOrdering {
    /// The `K` private streams followed by the first `n - K` ordered
    /// common streams.
    pub fn top(&self, n: usize) -> Vec<UserSet> {
        let mut out: Vec<UserSet> = (0..self.users).map(UserSet::singleton).collect();
        out.extend(self.entries.iter().take(n.saturating_sub(self.users)).map(|e| e.stream));
        out.truncate(n.max(1));
        out
    }

    /// 1-based rank of a common stream.
    pub fn rank_of(&self, s: UserSet) -> Option<usize> {
        self.entries.iter().position(|e| e.stream == s).map(|i| i + 1)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| json!({"stream_bitmask": e.stream.bits(), "c_value": finite_or_inf(e.c_value), "rank": i + 1}))
            .collect();
        json!({"schema": 1, "sigma": self.sigma, "seed": self.seed, "ordering": entries})
    }
}

fn finite_or_inf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

/// Ranks every common stream by `c_S` perturbed with uniform noise of
/// standard deviation `sigma` (default `1e-6` times the median finite
/// `c_S`). Ties go to the smaller bitmask; `+inf` ranks first.
pub fn order_streams(ch: &Channel, sigma: Option<f64>, seed: u64, tol: f64) -> Result<StreamOrdering> {
    if let Some(s) = sigma {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Precondition(format!("sigma must be finite and nonnegative, got {s}")));
        }
    }
    let commons: Vec<UserSet> = UserSet::nonempty_subsets(ch.users()).filter(|s| s.len() >= 2).collect();
    let splits = Splitter::new(ch, tol)?.all()?;
    let c = thresholds_from(&splits, &commons);
    let sigma = sigma.unwrap_or_else(|| {
        let mut finite: Vec<f64> = c.values().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        if finite.is_empty() {
            return 0.0;
        }
        let n = finite.len();
        let median = if n % 2 == 1 { finite[n / 2] } else { 0.5 * (finite[n / 2 - 1] + finite[n / 2]) };
        1e-6 * median
    });
    let half_width = 3f64.sqrt() * sigma;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<OrderedStream> = commons
        .iter()
        .map(|&s| {
            let noise = if half_width > 0.0 { rng.random_range(-half_width..=half_width) } else { 0.0 };
            OrderedStream { stream: s, c_value: c[&s], randomized_c: c[&s] + noise }
        })
        .collect();
    entries.sort_by(|a, b| b.randomized_c.total_cmp(&a.randomized_c).then(a.stream.bits().cmp(&b.stream.bits())));
    Ok(StreamOrdering { users: ch.users(), entries, sigma, seed })
}

/// Sum rate with every stream outside `active` fixed to zero (the
/// constraints keep their right-hand sides).
pub fn sum_rate_with_streams(ch: &Channel, p: f64, active: &[UserSet]) -> Result<f64> {
    if let Some(s) = active.iter().find(|s| s.is_empty() || !s.is_subset_of(ch.all_users())) {
        return Err(Error::Contract(format!("stream {s} is not a nonempty subset of the users")));
    }
    let rows = rs_constraints(ch, p)?;
    let mut active = active.to_vec();
    active.sort_by(UserSet::canonical_cmp);
    active.dedup();
    Ok(solve_streams(&rows, &active, |_| 1.0)?.0)
}
