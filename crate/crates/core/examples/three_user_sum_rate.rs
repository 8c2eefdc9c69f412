//! Three users: LP sum rate next to the closed form, the split solution
//! and the DPC sum capacity.
//!
//!     cargo run --example three_user_sum_rate

use rsbc::channel::rayleigh;
use rsbc::sumrate::{dpc_sum_capacity, rs_sum_rate, three_user_split_solution, three_user_terms};
use rsbc::{db_to_linear, Result};

fn main() -> Result<()> {
    for seed in 0..4 {
        let ch = rayleigh(3, 3, seed)?;
        let p = db_to_linear(20.0);
        let lp = rs_sum_rate(&ch, p)?;
        let terms = three_user_terms(&ch, p)?;
        let dpc = dpc_sum_capacity(&ch, p)?;
        println!(
            "seed {seed}: LP {:.4}  min-term {:.4}  closed form {:.4}  DPC {:.4}",
            lp.rs_lp_value,
            terms.min_term(),
            terms.closed_form(),
            dpc
        );
        let tau_ok = (0..3).all(|k| terms.tau[k] <= terms.cap(&[k]));
        if !tau_ok {
            println!("  some tau_k exceeds C_k; the LP can sit below the min-term");
        }
        match three_user_split_solution(&ch, p) {
            Ok(rates) => {
                let parts: Vec<String> = rates.iter().filter(|(_, r)| **r > 1e-9).map(|(s, r)| format!("R{s}={r:.3}")).collect();
                println!("  split: {}", parts.join(" "));
            }
            Err(e) => println!("  split: {e}"),
        }
    }
    Ok(())
}
