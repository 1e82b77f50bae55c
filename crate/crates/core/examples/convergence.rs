//! `mu_n(h)` for continuous `h` on the product, as `n` grows. Test functions
//! use the same syntax as the command line: `pow:P`, `affine:A,B`,
//! `indicator:T`.
//!
//! `cargo run --release --example convergence -- pow:1 indicator:1/2 14`

use jn_lab::analysis::convergence_table;
use jn_lab::exactmath::pi_interval;
use jn_lab::spaces::{ProductFunction, TestFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let f = TestFunction::parse(&args.next().unwrap_or_else(|| "pow:1".into()))?;
    let g = TestFunction::parse(&args.next().unwrap_or_else(|| "pow:1".into()))?;
    let n_max: u32 = args.next().map_or(Ok(14), |a| a.parse())?;
    let pi = pi_interval(50)?;

    for h in [ProductFunction::Tensor(f.clone(), g.clone()), ProductFunction::Sum(f, g)] {
        println!("{h:?}");
        for row in convergence_table(&h, 1..=n_max, &pi)? {
            let fields = row.fields();
            println!("  n = {:>2}  value {:>14}  bound {}", fields[0], fields[2], fields[3]);
        }
    }
    Ok(())
}
