use jn_lab::analysis::{best_shift, generalized_from, parse_sizes, Staircase};
use jn_lab::complemented::{build_bumps, check_st, hat_at, C0Vector};
use jn_lab::exactmath::{fmt_rat, parse_rat, pi_interval, sqrt_bracket, BigRat};
use jn_lab::measures::{
    build_mu, eval_function, eval_rectangle, eval_sum, eval_tensor, negated_rows, AxisFunction, GridFunction,
    IndexRectangle, JNMeasure, MeasureDoc, SignMatrix,
};
use jn_lab::rectopt::{brute_sup_for, oracle_sup_for, sup_closed};
use jn_lab::spaces::TestFunction;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn small_rat() -> impl Strategy<Value = BigRat> {
    (-50i64..=50, 1i64..=30).prop_map(|(p, q)| BigRat::new(BigInt::from(p), BigInt::from(q)))
}

fn rect_for(n: u32) -> impl Strategy<Value = (u32, IndexRectangle)> {
    (prop::collection::vec(any::<bool>(), 1usize << n), prop::collection::vec(any::<bool>(), n as usize)).prop_map(
        move |(rs, cs)| {
            let rows = rs.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s as u64).collect();
            let cols = cs.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j as u32).collect();
            (n, IndexRectangle::new(rows, cols))
        },
    )
}

fn any_rect() -> impl Strategy<Value = (u32, IndexRectangle)> {
    (1u32..=8).prop_flat_map(rect_for)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangles_never_exceed_the_supremum((n, rect) in any_rect()) {
        let mu = build_mu(n).unwrap();
        let v = eval_rectangle(&mu, &rect).unwrap();
        prop_assert!(v.abs() <= sup_closed(n as u64));
        // negating the row patterns flips the sign
        let neg = IndexRectangle::new(negated_rows(mu.matrix(), &rect.rows), rect.cols.clone());
        prop_assert_eq!(eval_rectangle(&mu, &neg).unwrap(), -v.clone());
        // the cell-by-cell grid sum agrees
        let grid = GridFunction::from_fn(n, |s, j| {
            if rect.rows.binary_search(&s).is_ok() && rect.cols.contains(&j) { BigRat::from_integer(1.into()) } else { BigRat::zero() }
        });
        prop_assert_eq!(eval_function(&mu, &grid).unwrap(), v);
    }

    #[test]
    fn measure_doc_round_trips((n, rect) in any_rect()) {
        let mu = build_mu(n).unwrap();
        let doc = MeasureDoc::new(&mu, Some(&rect));
        let text = serde_json::to_string(&doc).unwrap();
        let back: MeasureDoc = serde_json::from_str(&text).unwrap();
        let (mu2, rect2) = back.restore().unwrap();
        prop_assert_eq!(mu2.scale(), mu.scale());
        prop_assert_eq!(rect2, Some(rect));
    }

    #[test]
    fn tensor_and_sum_match_grid(n in 1u32..=6, seed in any::<u64>()) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            BigRat::new(BigInt::from((state >> 40) as i64 % 41 - 20), BigInt::from((state >> 20) as i64 % 17 + 1))
        };
        let f = AxisFunction::new((0..1usize << n).map(|_| next()).collect());
        let g = AxisFunction::new((0..n).map(|_| next()).collect());
        let mu = build_mu(n).unwrap();
        let prod = GridFunction::from_fn(n, |s, j| &f.values[s as usize] * &g.values[j as usize]);
        let sum = GridFunction::from_fn(n, |s, j| &f.values[s as usize] + &g.values[j as usize]);
        prop_assert_eq!(eval_tensor(&mu, &f, &g).unwrap(), eval_function(&mu, &prod).unwrap());
        prop_assert_eq!(eval_sum(&mu, &f, &g).unwrap(), eval_function(&mu, &sum).unwrap());
    }

    #[test]
    fn recentering_equals_grid_norm(
        f in prop::collection::vec(small_rat(), 1..10),
        g in prop::collection::vec(small_rat(), 1..6),
    ) {
        let mut grid = BigRat::zero();
        for x in &f {
            for y in &g {
                grid = grid.max((x + y).abs());
            }
        }
        let (_, best) = best_shift(&AxisFunction::new(f), &AxisFunction::new(g)).unwrap();
        prop_assert_eq!(best, grid);
    }

    #[test]
    fn rationals_round_trip(r in small_rat()) {
        prop_assert_eq!(parse_rat(&fmt_rat(&r)).unwrap(), r);
    }

    #[test]
    fn sqrt_brackets_enclose(p in 1i64..1_000_000, q in 1i64..1000, digits in 1u32..30) {
        let x = BigRat::new(BigInt::from(p), BigInt::from(q));
        let (lo, hi) = sqrt_bracket(&x, digits);
        prop_assert!(&lo * &lo <= x && x <= &hi * &hi);
        prop_assert!(lo < hi);
    }

    #[test]
    fn pi_intervals_nest(a in 1u32..=120, b in 1u32..=120) {
        let (a, b) = (a.min(b), a.max(b));
        let (pa, pb) = (pi_interval(a).unwrap(), pi_interval(b).unwrap());
        prop_assert!(pa.lo <= pb.lo && pb.hi <= pa.hi);
    }

    #[test]
    fn test_functions_round_trip(p in 0u32..5, a in small_rat(), b in small_rat()) {
        for f in [TestFunction::Power(p), TestFunction::Affine { a: a.clone(), b: b.clone() }, TestFunction::Indicator { threshold: a.abs() }] {
            prop_assert_eq!(TestFunction::parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn staircase_thresholds_are_valid(raw in prop::collection::vec((1u64..200, 1u64..10), 1..40)) {
        // sizes that eventually grow, so stage one exists
        let mut sizes = raw;
        sizes.push((4, 2));
        if let Ok(st) = Staircase::new(&sizes) {
            let phis = st.thresholds();
            prop_assert!(phis.windows(2).all(|w| w[0] < w[1]));
            for (m, &phi) in phis.iter().enumerate() {
                let m = m as u32 + 1;
                for &(a, b) in &sizes[phi as usize - 1..] {
                    prop_assert!(a >= 1 << m && b >= m as u64);
                }
            }
            for n in 1..=sizes.len() as u64 {
                let g = generalized_from(&st, n).unwrap();
                prop_assert!(g.support_within_blocks());
                prop_assert!(g.norm() == BigRat::from_integer(1.into()));
            }
        }
    }

    #[test]
    fn hats_are_bounded_and_single(x in small_rat(), y in small_rat()) {
        let fam = build_bumps(4).unwrap();
        let one = BigRat::from_integer(1.into());
        let values: Vec<BigRat> = (1..=4).map(|n| fam.eval(n, &x, &y).unwrap()).collect();
        prop_assert!(values.iter().all(|v| !v.is_negative() && v <= &one));
        prop_assert!(values.iter().filter(|v| !v.is_zero()).count() <= 1);
        if let Some((_, h)) = hat_at(&x) {
            prop_assert!(h.is_positive() && h <= one);
        }
    }

    #[test]
    fn st_is_identity(entries in prop::collection::vec((1u32..=5, small_rat()), 0..6)) {
        let fam = build_bumps(5).unwrap();
        prop_assert!(check_st(&fam, &C0Vector::new(entries), 5).unwrap());
    }
}

/// Random row permutations of the sign patterns agree between the column-set
/// oracle and full enumeration.
#[test]
fn oracle_matches_brute_on_permuted_matrices() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(24));
    let strat = (1u32..=3).prop_flat_map(|n| Just((0..1u64 << n).collect::<Vec<u64>>()).prop_shuffle().prop_map(move |p| (n, p)));
    runner
        .run(&strat, |(n, patterns)| {
            let mu = JNMeasure::from_matrix(SignMatrix::from_patterns(n, patterns).unwrap());
            let w = oracle_sup_for(&mu).unwrap();
            prop_assert_eq!(w.value.clone(), brute_sup_for(&mu).unwrap());
            prop_assert_eq!(w.value, sup_closed(n as u64));
            Ok(())
        })
        .unwrap();
}

#[test]
fn generalized_identity_sizes_parse() {
    assert_eq!(parse_sizes("id:3").unwrap(), vec![(1, 1), (2, 2), (3, 3)]);
}
