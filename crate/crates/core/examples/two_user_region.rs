//! Two users: the rate-splitting constraints collapse onto the MAC-style
//! polymatroid {R1 <= C1, R2 <= C2, R1 + R2 <= C12}.
//!
//!     cargo run --example two_user_region

use rsbc::channel::rayleigh;
use rsbc::regions::{all_capacity_terms, mac_greedy_point, rs_constraints};
use rsbc::sumrate::rs_weighted_max;
use rsbc::{db_to_linear, Result};

fn main() -> Result<()> {
    let ch = rayleigh(2, 2, 7)?;
    let p = db_to_linear(20.0);

    println!("constraints at P = 20 dB:");
    for row in rs_constraints(&ch, p)? {
        let lhs: Vec<String> = row.streams.iter().map(|s| format!("R{s}")).collect();
        println!("  user {}: {} <= {:.4}   from {}", row.pivot + 1, lhs.join(" + "), row.rhs, row.provenance);
    }

    let cap = all_capacity_terms(&ch, p)?;
    println!("C1 = {:.4}, C2 = {:.4}, C12 = {:.4}", cap[1], cap[2], cap[3]);

    println!("\n  w1     w2     RS LP     greedy vertex");
    for w in [[1.0, 1.0], [2.0, 1.0], [1.0, 3.0], [1.0, 0.0]] {
        let lp = rs_weighted_max(&ch, p, &w)?;
        let v = mac_greedy_point(&ch, p, &w)?;
        println!("  {:.1}    {:.1}    {lp:8.4}  ({:.4}, {:.4})", w[0], w[1], v[0], v[1]);
    }
    Ok(())
}
