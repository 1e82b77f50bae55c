//! The largest `|mu_n(A x B)|` over rectangles, computed three ways.
//!
//! `cargo run --example supremum -- 10`

use jn_lab::exactmath::to_decimal;
use jn_lab::rectopt::{brute_sup, oracle_sup, sup_closed, sup_fixed_b, witness_majority};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: u32 = std::env::args().nth(1).map_or(Ok(10), |a| a.parse())?;
    println!("{:>3} {:>12} {:>14} {:>8}", "n", "closed", "decimal", "brute");
    for n in 1..=n_max {
        let closed = sup_closed(n as u64);
        let oracle = oracle_sup(n)?;
        assert_eq!(oracle.value, closed);
        // full enumeration is only feasible for tiny n
        let brute = if n <= 4 { brute_sup(n)?.to_string() } else { "-".into() };
        println!("{n:>3} {:>12} {:>14} {brute:>8}", closed.to_string(), to_decimal(&closed, 8));
    }

    let n = n_max.min(8);
    let w = witness_majority(n)?;
    println!("\nmajority witness at n = {n}: {} rows, {} columns, value {}", w.rect.rows.len(), w.rect.cols.len(), w.value);
    println!("fixed column count k at n = {n}:");
    for k in 1..=n {
        println!("  k = {k}: {}", sup_fixed_b(n, k)?);
    }
    Ok(())
}
