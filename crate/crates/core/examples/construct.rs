//! Build `mu_n`, print its sign matrix, and check the basic invariants.
//!
//! `cargo run --example construct -- 4`

use jn_lab::measures::build_mu;
use num_traits::{One, Zero};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args().nth(1).map_or(Ok(4), |a| a.parse())?;
    let mu = build_mu(n)?;
    mu.matrix().validate()?;
    println!("mu_{n}: {} atoms of weight +-{}", mu.support_size(), mu.scale());
    if n <= 6 {
        for (s, row) in mu.matrix().to_rows().iter().enumerate() {
            let signs: String = row.iter().map(|&e| if e > 0 { '+' } else { '-' }).collect();
            println!("  row {s:>3}: {signs}");
        }
    }
    println!("column sums:     {:?}", mu.matrix().column_sums());
    println!("total variation: {}", mu.total_variation());
    println!("total mass:      {}", mu.total_mass());
    assert!(mu.total_variation().is_one() && mu.total_mass().is_zero());
    Ok(())
}
