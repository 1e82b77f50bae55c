//! Random tensors `f (x) g` and sums `f (+) g` against the decay bound
//! `(8/sqrt(pi)) n^(-1/2)`, plus one hand-picked sum showing the re-centering
//! shift.
//!
//! `cargo run --release --example decay -- 8 200`

use jn_lab::analysis::{run_trials, sum_bound, tensor_bound, DecayVerdict, TrialForm};
use jn_lab::exactmath::{pi_interval, rat};
use jn_lab::measures::{build_mu, AxisFunction};
use num_traits::Zero;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_max: u32 = args.next().map_or(Ok(8), |a| a.parse())?;
    let trials: u32 = args.next().map_or(Ok(200), |a| a.parse())?;
    let pi = pi_interval(50)?;

    for form in [TrialForm::Tensor, TrialForm::Sum] {
        let rows = run_trials(form, 1..=n_max, trials, 7, &pi)?;
        let holds = rows.iter().filter(|r| r.verdict == DecayVerdict::ProvenHolds).count();
        // a zero bound only arises for zero data, where the left side is zero too
        let worst = rows.iter().filter(|r| !r.rhs_floor.is_zero()).map(|r| &r.lhs / &r.rhs_floor).max().unwrap_or_default();
        println!("{form:?}: {holds}/{} proven, worst lhs/bound ratio {}", rows.len(), jn_lab::exactmath::to_decimal(&worst, 4));
    }

    let n = 4;
    let mu = build_mu(n)?;
    let f = AxisFunction::new((0..1 << n).map(|s| rat(s % 3 + 5, 1)).collect());
    let g = AxisFunction::new((0..n as i64).map(|j| rat(-j - 5, 1)).collect());
    let t = tensor_bound(&mu, &f, &g, &pi)?;
    println!("\ntensor at n = {n}: |mu(f g)| = {} <= {}  [{}]", t.lhs, jn_lab::exactmath::to_decimal(&t.rhs_certified_floor, 8), t.verdict);
    let s = sum_bound(&mu, &f, &g, &pi)?;
    println!("sum at n = {n}: max|f| + max|g| = {}, grid norm = {}", s.proof_form.norm, s.grid_norm);
    println!("  best shift c = {} gives max|f+c| + max|g-c| = {}", s.recentered_shift, s.recentered_norm);
    println!("  verdict {}", s.verdict());
    Ok(())
}
