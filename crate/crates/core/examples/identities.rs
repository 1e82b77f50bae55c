//! Binomial, `S_k` and Wallis identities checked in exact arithmetic.
//!
//! `cargo run --release --example identities -- 300 2000`

use jn_lab::exactmath::{g_value, identity_suite, pi_interval, rat, s_closed, s_identity, wallis, wallis_closed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let k_max: u64 = args.next().map_or(Ok(300), |a| a.parse())?;
    let m_max: u64 = args.next().map_or(Ok(2000), |a| a.parse())?;

    for k in 1..=6 {
        let id = s_identity(k);
        println!("S_{k} = {}  holds: {}  g({k}) = {}", s_closed(k), id.holds(), g_value(k));
    }
    for m in [1, 2, 5] {
        let w = wallis(m);
        println!("{} < 2/pi < {}  (closed form {})", w.lower_seq, w.upper_seq, wallis_closed(m));
    }

    let pi = pi_interval(50)?;
    let r = identity_suite(k_max, m_max, &pi);
    println!("\nk <= {k_max}, m <= {m_max}:");
    println!("  pascal {} absorption {} S_k {} g monotone {}", r.pascal, r.absorption, r.s_identity, r.g_monotone);
    println!("  wallis monotone {} bracket {} central binomial {}", r.wallis_monotone, r.wallis_bracket, r.central_binom);
    println!("  bracket width at m = {m_max}: {}", jn_lab::exactmath::to_decimal(&r.wallis_width, 6));
    println!("  overall (width tolerance 1/100): {}", r.verdict(&rat(1, 100)));
    Ok(())
}
