use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bitmask over users; bit `k` is user `k` (0-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserSet(pub u16);

impl UserSet {
    pub const MAX_USERS: usize = 16;
    pub const EMPTY: UserSet = UserSet(0);

    /// `{0, ..., k-1}`.
    pub fn full(k: usize) -> Self {
        assert!(k <= Self::MAX_USERS, "at most {} users", Self::MAX_USERS);
        UserSet(((1u32 << k) - 1) as u16)
    }

    pub fn singleton(k: usize) -> Self {
        assert!(k < Self::MAX_USERS);
        UserSet(1 << k)
    }

    pub fn from_users(users: &[usize]) -> Self {
        users.iter().fold(Self::EMPTY, |s, &k| s.with(k))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, k: usize) -> bool {
        k < Self::MAX_USERS && self.0 & (1 << k) != 0
    }

    pub fn with(self, k: usize) -> Self {
        assert!(k < Self::MAX_USERS);
        UserSet(self.0 | (1 << k))
    }

    pub fn users(self) -> impl Iterator<Item = usize> {
        (0..Self::MAX_USERS).filter(move |&k| self.contains(k))
    }

    pub fn is_subset_of(self, other: UserSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset_of(self, other: UserSet) -> bool {
        self != other && self.is_subset_of(other)
    }

    pub fn union(self, other: UserSet) -> Self {
        UserSet(self.0 | other.0)
    }

    pub fn intersection(self, other: UserSet) -> Self {
        UserSet(self.0 & other.0)
    }

    pub fn minus(self, other: UserSet) -> Self {
        UserSet(self.0 & !other.0)
    }

    /// `[k] \ self`.
    pub fn complement(self, k: usize) -> Self {
        Self::full(k).minus(self)
    }

    /// All nonempty subsets of `[k]` in increasing bitmask order.
    pub fn nonempty_subsets(k: usize) -> impl Iterator<Item = UserSet> {
        (1..=Self::full(k).0 as u32).map(|b| UserSet(b as u16))
    }

    /// Cardinality first, then bitmask; the order used for display and export.
    pub fn canonical_cmp(&self, other: &UserSet) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then(self.0.cmp(&other.0))
    }
}

impl fmt::Display for UserSet {
    /// 1-based, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.users().map(|k| (k + 1).to_string()).collect();
        write!(f, "{{{}}}", inner.join(","))
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Deletes every member that is a proper subset of another member.
/// Duplicates collapse to one copy; output is in canonical order.
pub fn reduce_antichain(sets: &[UserSet]) -> Vec<UserSet> {
    let mut out: Vec<UserSet> = sets
        .iter()
        .copied()
        .filter(|s| !sets.iter().any(|t| s.is_proper_subset_of(*t)))
        .collect();
    out.sort_by(UserSet::canonical_cmp);
    out.dedup();
    out
}

/// A family of user sets that all contain `pivot`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Collection {
    pivot: usize,
    members: Vec<UserSet>,
    minimal: bool,
}

impl Collection {
    pub fn new(pivot: usize, members: Vec<UserSet>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Contract("collection must be nonempty".into()));
        }
        if let Some(s) = members.iter().find(|s| !s.contains(pivot)) {
            return Err(Error::Contract(format!("member {s} does not contain user {}", pivot + 1)));
        }
        let mut sorted = members;
        sorted.sort_by(UserSet::canonical_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("collection has duplicate members".into()));
        }
        let minimal = is_antichain(&sorted);
        Ok(Self { pivot, members: sorted, minimal })
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn members(&self) -> &[UserSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// No member is a proper subset of another.
    pub fn is_minimal(&self) -> bool {
        self.minimal
    }

    pub fn reduce_to_minimal(&self) -> Collection {
        Collection { pivot: self.pivot, members: reduce_antichain(&self.members), minimal: true }
    }

    /// Closes the collection downward within the sets containing the pivot:
    /// adds every `S` with `pivot in S` that is a proper subset of some member.
    pub fn maximal_of(&self) -> Collection {
        let pivot = UserSet::singleton(self.pivot);
        let union = self.members.iter().fold(UserSet::EMPTY, |a, s| a.union(*s));
        let mut out = Vec::new();
        // enumerate subsets of the union that contain the pivot
        let rest = union.minus(pivot).0;
        let mut sub = rest;
        loop {
            let cand = UserSet(sub).union(pivot);
            if self.members.iter().any(|m| cand.is_subset_of(*m)) {
                out.push(cand);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        out.sort_by(UserSet::canonical_cmp);
        let minimal = is_antichain(&out);
        Collection { pivot: self.pivot, members: out, minimal }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.members.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", inner.join(","))
    }
}

impl fmt::Debug for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}@{}", self.pivot + 1)
    }
}

fn is_antichain(sets: &[UserSet]) -> bool {
    sets.iter().all(|s| !sets.iter().any(|t| s.is_proper_subset_of(*t)))
}

/// Largest user count for which antichain enumeration is allowed.
pub const MAX_ENUMERATION_USERS: usize = 6;

/// All nonempty antichains of subsets of `[k_users]` whose members contain
/// `pivot`.
///
/// Depth-first over candidate sets in decreasing cardinality; a candidate is
/// taken only if no chosen set contains it. Emission order is the DFS
/// preorder, which is the canonical constraint order.
pub fn enumerate_minimal_collections(pivot: usize, k_users: usize) -> Result<Vec<Collection>> {
    if k_users > MAX_ENUMERATION_USERS {
        return Err(Error::Capacity(format!(
            "minimal collections grow like the Dedekind number of K-1; K={k_users} exceeds the limit {MAX_ENUMERATION_USERS}"
        )));
    }
    if pivot >= k_users {
        return Err(Error::Contract(format!("user {pivot} out of range for K={k_users}")));
    }
    let p = UserSet::singleton(pivot);
    let mut candidates: Vec<UserSet> = UserSet::nonempty_subsets(k_users).filter(|s| s.contains(pivot)).collect();
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then(a.0.cmp(&b.0)));
    debug_assert!(candidates.iter().all(|s| s.is_subset_of(UserSet::full(k_users)) && p.is_subset_of(*s)));

    let mut out = Vec::new();
    let mut chosen = Vec::new();
    dfs(&candidates, 0, &mut chosen, &mut out, pivot);
    Ok(out)
}

fn dfs(cands: &[UserSet], start: usize, chosen: &mut Vec<UserSet>, out: &mut Vec<Collection>, pivot: usize) {
    for i in start..cands.len() {
        let c = cands[i];
        if chosen.iter().any(|s| c.is_subset_of(*s)) {
            continue;
        }
        chosen.push(c);
        let mut members = chosen.clone();
        members.sort_by(UserSet::canonical_cmp);
        out.push(Collection { pivot, members, minimal: true });
        dfs(cands, i + 1, chosen, out, pivot);
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(users: &[usize]) -> UserSet {
        UserSet::from_users(&users.iter().map(|u| u - 1).collect::<Vec<_>>())
    }

    fn coll(pivot: usize, sets: &[&[usize]]) -> Collection {
        Collection::new(pivot - 1, sets.iter().map(|s| set(s)).collect()).unwrap()
    }

    #[test]
    fn userset_basics() {
        let s = set(&[1, 3]);
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(s.bits(), 0b101);
        assert_eq!(s.len(), 2);
        assert!(set(&[1]).is_proper_subset_of(s));
        assert!(!s.is_proper_subset_of(s));
        assert_eq!(s.complement(3), set(&[2]));
        assert_eq!(UserSet::full(3), set(&[1, 2, 3]));
        assert_eq!(UserSet::nonempty_subsets(3).count(), 7);
        assert_eq!(UserSet::full(16).len(), 16);
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce_antichain(&[set(&[1]), set(&[3]), set(&[1, 2])]), vec![set(&[3]), set(&[1, 2])]);
        let chain = coll(1, &[&[1], &[1, 2], &[1, 2, 3]]);
        assert!(!chain.is_minimal());
        assert_eq!(chain.reduce_to_minimal().members(), &[set(&[1, 2, 3])]);
        let m = coll(1, &[&[1, 2], &[1, 3]]);
        assert!(m.is_minimal());
        assert_eq!(m.reduce_to_minimal(), m);
    }

    #[test]
    fn maximal_examples() {
        assert_eq!(coll(1, &[&[1, 2]]).maximal_of().members(), &[set(&[1]), set(&[1, 2])]);
        assert_eq!(coll(1, &[&[1]]).maximal_of().members(), &[set(&[1])]);
        // all 3-sets containing user 1 out of 4 users close to all sets of size 1..3 containing 1
        let top: Vec<UserSet> = UserSet::nonempty_subsets(4).filter(|s| s.contains(0) && s.len() == 3).collect();
        let closed = Collection::new(0, top).unwrap().maximal_of();
        let expected: Vec<UserSet> = {
            let mut v: Vec<UserSet> =
                UserSet::nonempty_subsets(4).filter(|s| s.contains(0) && s.len() <= 3).collect();
            v.sort_by(UserSet::canonical_cmp);
            v
        };
        assert_eq!(closed.members(), expected.as_slice());
    }

    #[test]
    fn invalid_collections() {
        assert!(Collection::new(0, vec![]).is_err());
        assert!(Collection::new(0, vec![set(&[2])]).is_err());
        assert!(Collection::new(0, vec![set(&[1]), set(&[1])]).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let k2 = enumerate_minimal_collections(0, 2).unwrap();
        let got: Vec<Vec<UserSet>> = k2.iter().map(|c| c.members().to_vec()).collect();
        assert_eq!(got.len(), 2);
        assert!(got.contains(&vec![set(&[1])]));
        assert!(got.contains(&vec![set(&[1, 2])]));

        let k3 = enumerate_minimal_collections(0, 3).unwrap();
        let mut got: Vec<String> = k3.iter().map(|c| c.to_string()).collect();
        got.sort();
        let mut want = vec!["{{1}}", "{{1,2}}", "{{1,3}}", "{{1,2},{1,3}}", "{{1,2,3}}"];
        want.sort();
        assert_eq!(got, want);

        assert_eq!(enumerate_minimal_collections(0, 1).unwrap().len(), 1);
        assert!(matches!(enumerate_minimal_collections(0, 7), Err(Error::Capacity(_))));
    }

    /// Independent count: test every family of sets containing the pivot.
    fn brute_force_count(k_users: usize) -> usize {
        let cands: Vec<UserSet> = UserSet::nonempty_subsets(k_users).filter(|s| s.contains(0)).collect();
        let n = cands.len();
        (1u64..(1u64 << n))
            .filter(|mask| {
                let fam: Vec<UserSet> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| cands[i]).collect();
                is_antichain(&fam)
            })
            .count()
    }

    #[test]
    fn enumeration_counts_match_dedekind() {
        // nonempty antichains on K-1 points: Dedekind(K-1) - 1
        let dedekind_minus_one = [1usize, 2, 5, 19, 167, 7580];
        for k_users in 1..=6 {
            for pivot in 0..k_users {
                let all = enumerate_minimal_collections(pivot, k_users).unwrap();
                assert_eq!(all.len(), dedekind_minus_one[k_users - 1], "K={k_users}");
                assert!(all.iter().all(|c| c.is_minimal() && c.members().iter().all(|s| s.contains(pivot))));
            }
        }
        for k_users in 1..=5 {
            assert_eq!(brute_force_count(k_users), dedekind_minus_one[k_users - 1]);
        }
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        let all = enumerate_minimal_collections(2, 5).unwrap();
        let mut seen = std::collections::HashSet::new();
        assert!(all.iter().all(|c| seen.insert(c.members().to_vec())));
    }

    proptest! {
        #[test]
        fn reduce_of_maximal_is_identity(k_users in 1usize..6, pick in any::<prop::sample::Index>()) {
            let pivot = pick.index(k_users);
            let all = enumerate_minimal_collections(pivot, k_users).unwrap();
            let m = &all[pick.index(all.len())];
            let closed = m.maximal_of();
            prop_assert!(m.members().iter().all(|s| closed.members().contains(s)));
            prop_assert!(closed.members().iter().all(|s| s.contains(pivot)));
            prop_assert_eq!(closed.reduce_to_minimal(), m.clone());
        }

        #[test]
        fn reduce_is_idempotent(bits in prop::collection::vec(1u16..64, 1..8)) {
            let sets: Vec<UserSet> = bits.into_iter().map(UserSet).collect();
            let once = reduce_antichain(&sets);
            prop_assert_eq!(reduce_antichain(&once), once.clone());
            prop_assert!(is_antichain(&once));
        }
    }
}
