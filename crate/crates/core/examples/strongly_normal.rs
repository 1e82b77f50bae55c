//! Partial sums `sum_s |mu_s(f (x) g)|` along a subsequence, against the sum
//! of the per-term decay bounds.
//!
//! `cargo run --release --example strongly_normal -- 1,4,9,16`

use jn_lab::analysis::{random_block_function, strongly_normal_partial, trial_rng};
use jn_lab::exactmath::{pi_interval, to_decimal};
use jn_lab::spaces::{Side, TestFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let subseq: Vec<u32> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "1,4,9,16".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let pi = pi_interval(50)?;

    let x = TestFunction::parse("pow:1")?;
    let r = strongly_normal_partial(&subseq, &x, &x, &pi)?;
    println!("f = g = x on {subseq:?}");
    for (s, term) in subseq.iter().zip(&r.terms) {
        println!("  s = {s:>3}: {}", to_decimal(term, 8));
    }
    println!("  sum {} <= {}  [{}]", to_decimal(&r.partial_sum, 8), to_decimal(&r.bound_floor, 8), r.verdict);

    for t in 0..5 {
        let mut rng = trial_rng(1, 0, t);
        let f = random_block_function(&mut rng, Side::K, &subseq);
        let g = random_block_function(&mut rng, Side::L, &subseq);
        let r = strongly_normal_partial(&subseq, &f, &g, &pi)?;
        println!("random pair {t}: sum {} <= {}  [{}]", to_decimal(&r.partial_sum, 6), to_decimal(&r.bound_floor, 6), r.verdict);
    }
    Ok(())
}
