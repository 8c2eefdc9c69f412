//! Constant-gap analysis of rate-splitting (RS) with MMSE precoding in
//! K-user MIMO broadcast channels.
//!
//! The crate builds the reduced RS rate-constraint system (one constraint per
//! user and minimal decoding collection), solves it as a linear program,
//! evaluates the three-user closed form and the K-user analytical upper
//! bound, and implements stream elimination and stream ordering based on
//! partitioned pseudoinverses of the channel.
//!
//! All rates are in bits per channel use (log base 2). User indices are
//! 0-based in the API; a [`regions::UserSet`] bitmask has bit `k` set for
//! user `k`, so user "1" of the usual 1-based notation is bit 0.
//!
//! Runnable walkthroughs of each capability live in `examples/`:
//!
//! ```bash
//! cargo run --release --example two_user_region
//! cargo run --release --example three_user_sum_rate
//! cargo run --release --example k_user_bound
//! cargo run --release --example linear_precoding_bound
//! cargo run --release --example gdof_separation
//! cargo run --release --example stream_elimination
//! cargo run --release --example stream_ordering
//! cargo run --release --example channel_io
//! ```
//!
//! The `rsbc` binary wraps [`cli::run`] for batch runs and the two Monte
//! Carlo sweeps (`fig-gap`, `fig-ordering`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod lp;
pub mod numerics;
pub mod regions;
pub mod streams;
pub mod sumrate;

pub use channel::Channel;
pub use error::{Error, Result};
pub use numerics::CMatrix;
pub use regions::{Collection, RateConstraint, UserSet};

/// Converts an SNR in dB to the dimensionless power `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
