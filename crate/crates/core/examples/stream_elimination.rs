//! Stream elimination on a channel with two orthogonal user groups: every
//! stream mixing the groups is dropped and the sum rate does not move.
//!
//!     cargo run --example stream_elimination

use rsbc::numerics::c;
use rsbc::streams::{eliminate, sum_rate_with_streams, Splitter, DEFAULT_SPLIT_TOL};
use rsbc::sumrate::rs_sum_rate;
use rsbc::{db_to_linear, CMatrix, Channel, Result, UserSet};

fn main() -> Result<()> {
    // users 1,2 share one direction on antennas 1,2, users 3,4 another on
    // antennas 3,4
    let mut h = CMatrix::zeros(4, 4);
    let (v, u) = ([c(1.0, 0.2), c(0.3, -0.5)], [c(-0.4, 0.1), c(0.9, 0.6)]);
    for (row, (dir, gain)) in [(v, 1.0), (v, -0.7), (u, 0.5), (u, 1.6)].into_iter().enumerate() {
        let offset = if row < 2 { 0 } else { 2 };
        for j in 0..2 {
            h[(row, offset + j)] = dir[j] * gain;
        }
    }
    let ch = Channel::miso(h)?;

    let splitter = Splitter::new(&ch, DEFAULT_SPLIT_TOL)?;
    for w in splitter.all()? {
        if w.solvable {
            println!("split {}: ||W||^2 = {:.4}", w.subset, w.norm_sq);
        }
    }

    let p = db_to_linear(25.0);
    let full = rs_sum_rate(&ch, p)?.rs_lp_value;
    let group = UserSet::from_users(&[0, 1]);
    let w = splitter.w_matrix(group)?;
    for threshold in [0.0, w.norm_sq, f64::INFINITY] {
        let e = eliminate(&ch, threshold, DEFAULT_SPLIT_TOL)?;
        let kept: Vec<String> = e.surviving.iter().map(|s| s.to_string()).collect();
        let rate = sum_rate_with_streams(&ch, p, &e.surviving)?;
        println!("c = {threshold:.4}: {} streams, sum rate {rate:.6} (all streams {full:.6})", kept.len());
        println!("  {}", kept.join(" "));
    }
    Ok(())
}
