//! Measures on blocks of arbitrary sizes `a_n x b_n`: once `a_n >= 2^m` and
//! `b_n >= m` from some point on, a copy of `mu_m` fits inside each block.
//! Size specs: `a:b,a:b,...`, `id:N` (`a_n = b_n = n`) or `pow2:N`
//! (`a_n = 2^n`, `b_n = n`).
//!
//! `cargo run --release --example generalized -- id:30`

use jn_lab::analysis::{generalized_table, parse_sizes, Staircase};
use jn_lab::exactmath::pi_interval;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "id:30".into());
    let sizes = parse_sizes(&spec)?;
    let stairs = Staircase::new(&sizes)?;
    println!("stage thresholds for {spec}: {:?}", stairs.thresholds());

    let pi = pi_interval(50)?;
    println!("{:>3} {:>5} {:>12} {:>7}  envelope", "n", "stage", "max value", "tested");
    for row in generalized_table(&sizes, 3, 6, &pi)? {
        let envelope = row.envelope.map_or("-".to_string(), |c| c.to_string());
        println!("{:>3} {:>5} {:>12} {:>7}  {envelope}", row.n, row.stage, row.max_value.to_string(), row.tested);
        assert!(row.norm == num_traits::One::one() && row.support_ok);
    }
    Ok(())
}
