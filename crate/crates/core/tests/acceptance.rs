//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! elapsed time against its budget. Exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use jn_lab::analysis::{
    generalized_table, parse_sizes, random_block_function, run_trials, strongly_normal_partial, trial_rng,
    DecayVerdict, TrialForm,
};
use jn_lab::complemented::{build_bumps, is_half_identity, random_projection_trials, random_st_trials};
use jn_lab::exactmath::{identity_suite, pi_interval, rat, BigRat, Certainty, PiInterval};
use jn_lab::measures::build_mu;
use jn_lab::rectopt::{bound4_table, brute_sup, check_fixed_b_sandwich, optimal_a, oracle_sup, sup_closed, sup_fixed_b};
use jn_lab::spaces::Side;
use num_traits::{One, Zero};

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Option<Duration>, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn supremum() -> Outcome {
    let frozen = [rat(1, 2), rat(1, 4), rat(1, 4), rat(3, 16)];
    for n in 1..=4u32 {
        let brute = brute_sup(n).map_err(|e| e.to_string())?;
        ensure(brute == sup_closed(n as u64), || format!("brute force differs at n = {n}"))?;
        ensure(brute == frozen[n as usize - 1], || format!("n = {n}: {brute}"))?;
    }
    for n in 1..=12u32 {
        let w = oracle_sup(n).map_err(|e| e.to_string())?;
        ensure(w.value == sup_closed(n as u64), || format!("oracle differs at n = {n}"))?;
    }
    Ok("brute n<=4, oracle n<=12 equal the closed form".into())
}

fn strict_bounds(pi: &PiInterval) -> Outcome {
    let table = bound4_table(10_000, pi);
    let bad: Vec<u64> = table.iter().filter(|v| v.both() != Certainty::ProvenStrict).map(|v| v.n).collect();
    ensure(table.len() == 10_000 && bad.is_empty(), || format!("not proven at n = {bad:?}"))?;
    Ok("both sides ProvenStrict for n = 1..=10000".into())
}

fn identities(pi: &PiInterval) -> Outcome {
    let r = identity_suite(1000, 10_000, pi);
    ensure(r.s_identity, || "S_k identity".into())?;
    ensure(r.g_monotone, || "g(k) monotone".into())?;
    ensure(r.pascal && r.absorption, || "binomial identities".into())?;
    ensure(r.wallis_monotone && r.wallis_closed, || "Wallis monotonicity".into())?;
    ensure(r.wallis_bracket == Certainty::ProvenStrict, || format!("Wallis bracket {}", r.wallis_bracket))?;
    ensure(r.wallis_within(&rat(1, 10_000)), || "Wallis width at m = 10^4".into())?;
    ensure(r.central_binom == Certainty::ProvenStrict, || format!("central binomial {}", r.central_binom))?;
    Ok("k <= 1000, m <= 10000".into())
}

fn norm_support() -> Outcome {
    for n in 1..=20u32 {
        let mu = build_mu(n).map_err(|e| e.to_string())?;
        mu.matrix().validate().map_err(|e| e.to_string())?;
        ensure(mu.total_variation().is_one(), || format!("norm at n = {n}"))?;
        ensure(mu.total_mass().is_zero(), || format!("mass at n = {n}"))?;
        ensure(mu.support_size() == n as u64 * (1 << n), || format!("support at n = {n}"))?;
        ensure(mu.positive_mass() == rat(1, 2), || format!("positive part at n = {n}"))?;
        if n <= 10 {
            // atom-by-atom recount
            let mut tv = BigRat::zero();
            let mut mass = BigRat::zero();
            let mut count = 0u64;
            for (s, j, _) in mu.atoms() {
                let w = mu.weight(s, j).map_err(|e| e.to_string())?;
                tv += if w < BigRat::zero() { -w.clone() } else { w.clone() };
                mass += w;
                count += 1;
            }
            ensure(tv.is_one() && mass.is_zero() && count == n as u64 * (1 << n), || format!("recount at n = {n}"))?;
        }
    }
    Ok("n = 1..=20".into())
}

fn decay(pi: &PiInterval) -> Outcome {
    for form in [TrialForm::Tensor, TrialForm::Sum] {
        let rows = run_trials(form, 1..=10, 1000, 2024, pi).map_err(|e| e.to_string())?;
        ensure(rows.len() == 10_000, || "trial count".into())?;
        let bad = rows.iter().filter(|r| r.verdict != DecayVerdict::ProvenHolds).count();
        ensure(bad == 0, || format!("{form:?}: {bad} trials not ProvenHolds"))?;
    }
    Ok("1000 tensor and 1000 sum trials per n = 1..=10".into())
}

fn fixed_b(pi: &PiInterval) -> Outcome {
    let mut checked = 0u64;
    for n in 1..=8u32 {
        let mu = build_mu(n).map_err(|e| e.to_string())?;
        for mask in 1u64..1 << n {
            let cols: Vec<u32> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let k = cols.len() as u32;
            let w = optimal_a(&mu, &cols).map_err(|e| e.to_string())?;
            let expected = sup_fixed_b(n, k).map_err(|e| e.to_string())?;
            ensure(w.value == expected, || format!("n = {n}, B = {cols:?}"))?;
            checked += 1;
        }
        for k in 1..=n {
            let c = check_fixed_b_sandwich(n, k, pi).map_err(|e| e.to_string())?;
            ensure(c == Certainty::ProvenStrict, || format!("sandwich n = {n}, |B| = {k}: {c}"))?;
        }
    }
    Ok(format!("{checked} column sets"))
}

fn generalized(pi: &PiInterval) -> Outcome {
    let rows = generalized_table(&parse_sizes("id:50").map_err(|e| e.to_string())?, 7, 8, pi).map_err(|e| e.to_string())?;
    ensure(rows.len() == 50, || "row count".into())?;
    for r in &rows {
        ensure(r.norm.is_one() && r.support_ok, || format!("norm or support at n = {}", r.n))?;
        ensure(r.envelope.map_or(r.stage == 0, |c| c == Certainty::ProvenStrict), || format!("envelope at n = {}", r.n))?;
    }
    let rows = generalized_table(&parse_sizes("pow2:12").map_err(|e| e.to_string())?, 7, 4, pi).map_err(|e| e.to_string())?;
    ensure(rows.iter().all(|r| r.matches_mu == Some(true)), || "sizes (2^n, n) differ from mu_n".into())?;
    Ok("a_n = b_n = n up to 50; (2^n, n) up to 12".into())
}

fn complemented() -> Outcome {
    let fam = build_bumps(12).map_err(|e| e.to_string())?;
    let m = fam.orthogonality_matrix().map_err(|e| e.to_string())?;
    ensure(is_half_identity(&m), || "orthogonality matrix".into())?;
    let passed = random_st_trials(&fam, 100, 99, 12).map_err(|e| e.to_string())?;
    ensure(passed == 100, || format!("ST = id on {passed}/100"))?;
    let small = build_bumps(8).map_err(|e| e.to_string())?;
    let passed = random_projection_trials(&small, 20, 99, 8).map_err(|e| e.to_string())?;
    ensure(passed == 20, || format!("P^2 = P on {passed}/20"))?;
    let d = fam.certify_disjointness().map_err(|e| e.to_string())?;
    ensure(d.holds, || "disjointness".into())?;
    Ok("n <= 12; 100 ST, 20 P^2".into())
}

fn strongly_normal(pi: &PiInterval) -> Outcome {
    let subseq = [1u32, 4, 9, 16];
    for t in 0..100u32 {
        let mut rng = trial_rng(31, 0, t);
        let f = random_block_function(&mut rng, Side::K, &subseq);
        let g = random_block_function(&mut rng, Side::L, &subseq);
        let r = strongly_normal_partial(&subseq, &f, &g, pi).map_err(|e| e.to_string())?;
        ensure(r.verdict == DecayVerdict::ProvenHolds, || format!("trial {t}: {}", r.verdict))?;
    }
    Ok("100 random pairs on {1, 4, 9, 16}".into())
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_jn-lab"))
            .args(["selftest", "--seed", "42", "--format", "json"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.code() == Some(0), || format!("selftest exit {:?}", a.status.code()))?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || "reports differ".into())?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let pi = pi_interval(50).expect("50 digits available");
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        (1, "supremum closed form", Some(secs(10)), Box::new(supremum)),
        (2, "strict bounds", Some(secs(30)), Box::new(|| strict_bounds(&pi))),
        (3, "identity suite", Some(secs(60)), Box::new(|| identities(&pi))),
        (4, "norm and support", None, Box::new(norm_support)),
        (5, "decay bounds", Some(secs(120)), Box::new(|| decay(&pi))),
        (6, "fixed-B supremum", None, Box::new(|| fixed_b(&pi))),
        (7, "generalized sizes", None, Box::new(|| generalized(&pi))),
        (8, "complemented machinery", Some(secs(30)), Box::new(complemented)),
        (9, "strongly normal partial sums", None, Box::new(|| strongly_normal(&pi))),
        (10, "determinism", None, Box::new(determinism)),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let budget_text = budget.map_or(String::new(), |b| format!(" / {}s", b.as_secs()));
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {id:>2} {status} [{:.1}s{budget_text}] {name}: {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
