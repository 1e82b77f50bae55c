//! Disjoint bumps `psi_n` with `mu_n(psi_n) = 1/2`, the operators
//! `T x = sum x_n psi_n` and `S f = (mu_n(f))_n`, and the projection `P = T S`.
//!
//! `cargo run --release --example complemented -- 8`

use jn_lab::analysis::trial_rng;
use jn_lab::complemented::{
    build_bumps, check_projection, is_half_identity, op_s, op_t, sign_bumps, AtomTable, C0Vector,
};
use jn_lab::exactmath::rat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: u32 = std::env::args().nth(1).map_or(Ok(8), |a| a.parse())?;
    let fam = build_bumps(n_max)?;

    let m = fam.orthogonality_matrix()?;
    println!("mu_n(psi_m) is half the identity on n, m <= {n_max}: {}", is_half_identity(&m));
    let d = fam.certify_disjointness()?;
    println!("supports disjoint: {}, smallest gap {}", d.holds, d.min_gap);
    let (lo, hi) = fam.range(1)?;
    println!("range of psi_1: [{lo}, {hi}]");

    let x = C0Vector::new([(1, rat(3, 1)), (2, rat(-1, 2)), (n_max, rat(1, 7))]);
    let sx = op_s(&fam, &op_t(&fam, &x)?, n_max)?;
    let show = |v: &C0Vector| v.entries().map(|(n, x)| format!("{n}: {x}")).collect::<Vec<_>>().join(", ");
    println!("x     = {}\nS T x = {}", show(&x), show(&sx));

    let small = n_max.min(6);
    let f = AtomTable::random(&mut trial_rng(5, small, 0), small);
    let report = check_projection(&fam, &x.restrict(small), &f, small)?;
    println!("on blocks <= {small}: {report:?}");

    let signed = sign_bumps(n_max)?;
    let (lo, hi) = signed.range(1)?;
    println!("signed bumps: mu_n(psi_n) = {}, range of psi_1: [{lo}, {hi}]", signed.pairing(1, 1)?);
    Ok(())
}
