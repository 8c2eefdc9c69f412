//! User-set combinatorics, MMSE covariances, capacity terms and the
//! rate-splitting constraint systems.

mod constraints;
mod covariance;
mod mac;
mod sets;

pub(crate) use covariance::ReceivedCovariances;

pub use constraints::{
    constraints_to_json, exact_constraints, rs_constraints, ConstraintRecord, PowerSplit, RateConstraint,
    MAX_EXACT_USERS,
};
pub use covariance::{all_capacity_terms, capacity_term, collection_covariance, mmse_covariance};
pub use mac::{duality_gap_bound, mac_greedy_point, mac_weighted_max};
pub use sets::{enumerate_minimal_collections, reduce_antichain, Collection, UserSet, MAX_ENUMERATION_USERS};
