//! Two-user MISO triangular channel: the linear-precoding sum-rate bound
//! against DPC as the cross gain grows.
//!
//!     cargo run --example linear_precoding_bound

use rsbc::channel::triangular_two_user;
use rsbc::numerics::c;
use rsbc::sumrate::{dpc_sum_capacity, lp_only_sum_rate_bound, rs_sum_rate};
use rsbc::{db_to_linear, Result};

fn main() -> Result<()> {
    let p = db_to_linear(40.0);
    println!("  |f|     |g|    linear bound   RS      DPC");
    for (f, g) in [(0.1, 0.1), (1.0, 0.1), (10.0, 1.0), (100.0, 3.0), (100.0, 30.0)] {
        let ch = triangular_two_user(c(f, 0.0), c(g, 0.0))?;
        println!(
            "{f:>6.1}  {g:>6.1}   {:>9.3}   {:>7.3}  {:>7.3}",
            lp_only_sum_rate_bound(&ch, p)?,
            rs_sum_rate(&ch, p)?.rs_lp_value,
            dpc_sum_capacity(&ch, p)?
        );
    }
    Ok(())
}
