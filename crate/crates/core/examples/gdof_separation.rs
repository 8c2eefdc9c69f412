//! High-SNR slopes on the two pathological families: capacity against the
//! RS closed form (three users) and against the linear-precoding bound
//! (two users).
//!
//!     cargo run --example gdof_separation

use rsbc::channel::{pathological_three_user, triangular_two_user};
use rsbc::numerics::c;
use rsbc::sumrate::{dpc_sum_capacity, gdof_slope, lp_only_sum_rate_bound, three_user_closed_form};
use rsbc::Result;

fn main() -> Result<()> {
    let powers: Vec<f64> = (0..=36).map(|i| 10f64.powf(i as f64 / 4.0)).collect();

    for alpha in [0.25, 0.5, 0.75] {
        let (mut cap, mut rs) = (Vec::new(), Vec::new());
        for &p in &powers {
            let ch = pathological_three_user(p, alpha)?;
            cap.push((p, dpc_sum_capacity(&ch, p)?));
            rs.push((p, three_user_closed_form(&ch, p)?));
        }
        println!("three users, alpha {alpha}: capacity slope {:.3}, RS slope {:.3}", gdof_slope(&cap)?, gdof_slope(&rs)?);
    }

    let (af, ag) = (0.6, 0.35);
    let (mut cap, mut lin) = (Vec::new(), Vec::new());
    for &p in &powers {
        let ch = triangular_two_user(c(p.powf(af), 0.0), c(p.powf(ag), 0.0))?;
        cap.push((p, dpc_sum_capacity(&ch, p)?));
        lin.push((p, lp_only_sum_rate_bound(&ch, p)?));
    }
    println!("two users, alpha_f {af}, alpha_g {ag}: capacity slope {:.3}, linear slope {:.3}", gdof_slope(&cap)?, gdof_slope(&lin)?);
    Ok(())
}
