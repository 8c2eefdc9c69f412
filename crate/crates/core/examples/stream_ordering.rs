//! Orders the common streams of a one-ring channel and traces the sum rate
//! as streams are switched on (one trial of `rsbc fig-ordering`).
//!
//!     cargo run --release --example stream_ordering

use rsbc::cli::onering_trial;
use rsbc::streams::{order_streams, sum_rate_with_streams, DEFAULT_SPLIT_TOL};
use rsbc::{db_to_linear, Result, UserSet};

fn main() -> Result<()> {
    let (k, seed) = (4, 3);
    let ch = onering_trial(k, 4, 2, seed)?;
    let p = db_to_linear(30.0);
    let ord = order_streams(&ch, None, seed, DEFAULT_SPLIT_TOL)?;

    println!("rank  stream      c_S");
    for (i, e) in ord.entries.iter().enumerate() {
        println!("{:>4}  {:<10}  {:.4}", i + 1, e.stream.to_string(), e.c_value);
    }

    let mut one_layer: Vec<UserSet> = (0..k).map(UserSet::singleton).collect();
    one_layer.push(ch.all_users());
    println!("\n1-layer baseline: {:.4}", sum_rate_with_streams(&ch, p, &one_layer)?);
    for n in k..(1 << k) {
        println!("top {n:>2}: {:.4}", sum_rate_with_streams(&ch, p, &ord.top(n))?);
    }
    Ok(())
}
