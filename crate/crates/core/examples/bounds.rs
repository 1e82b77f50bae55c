//! Certify `1/(2 sqrt(pi n)) < sup_n < 2/sqrt(pi n)` with a rational bracket
//! for `pi`, never touching floating point.
//!
//! `cargo run --example bounds -- 2000`

use jn_lab::exactmath::{pi_interval, to_decimal, Certainty};
use jn_lab::rectopt::{bound4_display, bound4_table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: u64 = std::env::args().nth(1).map_or(Ok(2000), |a| a.parse())?;
    let pi = pi_interval(50)?;
    let table = bound4_table(n_max, &pi);
    let proven = table.iter().filter(|v| v.both() == Certainty::ProvenStrict).count();
    println!("proven strict for {proven} of {n_max} values of n");

    for n in [1, 2, 10, 100, n_max] {
        let (lo, hi) = bound4_display(n, &pi);
        let v = &table[n as usize - 1];
        let d = |r| to_decimal(r, 10);
        println!("n = {n:>6}: {} < {} < {}  [{}]", d(&lo), d(&v.value), d(&hi), v.both());
    }

    // the bracket has room to spare, so even a one-digit pi interval certifies it
    let coarse = pi_interval(1)?;
    let weak = bound4_table(200, &coarse).iter().filter(|v| !v.both().is_proven()).count();
    println!("with pi in [{}, {}]: {weak} of 200 left unproven", coarse.lo, coarse.hi);
    Ok(())
}
