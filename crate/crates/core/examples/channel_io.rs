//! Writes a channel to CSV, reads it back and checks the digest.
//!
//!     cargo run --example channel_io -- /tmp/h.csv

use rsbc::channel::{load_channel, one_ring, random_groups, save_channel, OneRingParams};
use rsbc::Result;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("rsbc_channel.csv").display().to_string());
    let groups = random_groups(4, 2, 11);
    let ch = one_ring(4, 4, &OneRingParams::standard(2), &groups, 11)?;
    save_channel(&ch, &path)?;
    let back = load_channel(&path)?;
    println!("groups {groups:?}");
    println!("wrote {path}");
    println!("digest  {}", ch.digest());
    println!("reread  {}", back.digest());
    assert_eq!(ch, back);
    print!("{}", ch.to_csv());
    Ok(())
}
