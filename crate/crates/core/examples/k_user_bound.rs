//! K-user upper bound against the LP optimum on Rayleigh and one-ring
//! channels (a small version of `rsbc fig-gap`).
//!
//!     cargo run --release --example k_user_bound

use rsbc::channel::rayleigh;
use rsbc::cli::onering_trial;
use rsbc::sumrate::{k_user_upper_bound, rs_sum_rate};
use rsbc::{db_to_linear, Result};

fn main() -> Result<()> {
    let trials = 20;
    for k in [3, 4, 5] {
        for model in ["rayleigh", "onering"] {
            print!("K={k} {model:8}");
            for p_db in [0.0, 10.0, 20.0, 30.0] {
                let p = db_to_linear(p_db);
                let (mut rs, mut ub) = (0.0, 0.0);
                for seed in 0..trials {
                    let ch = if model == "rayleigh" { rayleigh(k, 6, seed)? } else { onering_trial(k, 6, 2, seed)? };
                    rs += rs_sum_rate(&ch, p)?.rs_lp_value;
                    ub += k_user_upper_bound(&ch, p)?;
                }
                print!("  {p_db:>2} dB: {:6.2} / {:6.2}", rs / trials as f64, ub / trials as f64);
            }
            println!();
        }
    }
    Ok(())
}
