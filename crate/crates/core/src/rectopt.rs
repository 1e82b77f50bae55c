//! The rectangle supremum `sup_{A x B} |mu_n(A x B)|`.
//!
//! Three independent routes:
//!
//! * [`sup_closed`]: `ceil(n/2) C(n, ceil(n/2)) / (n 2^n)`;
//! * [`oracle_sup`]: for every column set `B`, the optimal rows are exactly
//!   those with positive `B`-restricted sum, so one pass per `B` suffices;
//! * [`brute_sup`]: every pair `(A, B)`, with `A` walked in Gray-code order.
//!
//! Rectangles of the ambient spaces reduce to grid rectangles because
//! `mu_n(A x B) = mu_n((A n K_n) x (B n L_n))`, so only grid suprema are
//! computed here.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{
    ceil_half, fmt_rat, int_pi_gt, int_pi_lt, pi_times_gt, pi_times_lt, s_closed, sqrt_bracket, to_decimal, BigRat, Certainty, PiInterval,
    pow2, SClosedSeq,
};
use crate::measures::{build_mu, eval_rectangle, IndexRectangle, JNMeasure, SignMatrix};

pub const ORACLE_N_MAX: u32 = 14;
pub const BRUTE_N_MAX: u32 = 4;

/// A rectangle and its exact measure; the value is always re-evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RectWitness {
    pub rect: IndexRectangle,
    #[serde(serialize_with = "ser_rat")]
    pub value: BigRat,
}

fn ser_rat<S: serde::Serializer>(v: &BigRat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rat(v))
}

impl RectWitness {
    pub fn evaluate(mu: &JNMeasure, rect: IndexRectangle) -> Result<Self> {
        let value = eval_rectangle(mu, &rect)?;
        Ok(RectWitness { rect, value })
    }

    /// Fails unless `claimed` is the exact measure of `rect`.
    pub fn certify(mu: &JNMeasure, rect: IndexRectangle, claimed: BigRat) -> Result<Self> {
        let w = Self::evaluate(mu, rect)?;
        if w.value != claimed {
            return Err(Error::Domain(format!(
                "witness claims {} but the rectangle measures {}",
                fmt_rat(&claimed),
                fmt_rat(&w.value)
            )));
        }
        Ok(w)
    }
}

/// `ceil(n/2) C(n, ceil(n/2)) / (n 2^n)`.
pub fn sup_closed(n: u64) -> BigRat {
    assert!(n >= 1, "sup_closed needs n >= 1");
    BigRat::new(s_closed(n), BigInt::from(n) * pow2(n))
}

/// `sup_A |mu_n(A x B)|` for any `B` with `|B| = k`:
/// `ceil(k/2) C(k, ceil(k/2)) / (n 2^k)`.
pub fn sup_fixed_b(n: u32, k: u32) -> Result<BigRat> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("|B| = {k} must lie in 1..={n}")));
    }
    Ok(BigRat::new(s_closed(k as u64), BigInt::from(n) * pow2(k as u64)))
}

/// Best rows for a fixed column set: those whose `B`-restricted sum is
/// strictly positive. Zero-sum rows are left out.
pub fn optimal_a(mu: &JNMeasure, cols: &[u32]) -> Result<RectWitness> {
    if cols.is_empty() {
        return Err(Error::Domain("optimal_A needs a nonempty column set".into()));
    }
    let probe = IndexRectangle::new(vec![], cols.to_vec());
    probe.check_bounds(mu.n())?;
    let mask = probe.col_mask();
    let m = mu.matrix();
    let rows: Vec<u64> = (0..m.num_rows()).filter(|&s| m.row_sum(s, mask) > 0).collect();
    let total: i64 = rows.iter().map(|&s| m.row_sum(s, mask)).sum();
    let claimed = mu.scale() * BigInt::from(total);
    RectWitness::certify(mu, IndexRectangle::new(rows, probe.cols), claimed)
}

/// `sum_s max(r_s(B), 0)` for the column mask.
fn positive_part_sum(m: &SignMatrix, mask: u64) -> i64 {
    (0..m.num_rows()).map(|s| m.row_sum(s, mask).max(0)).sum()
}

/// Among equal values: larger `|B|` wins, then the lexicographically least
/// sorted column list.
fn better_mask(a: (i64, u64), b: (i64, u64)) -> Ordering {
    let (va, ma) = a;
    let (vb, mb) = b;
    va.cmp(&vb).then(ma.count_ones().cmp(&mb.count_ones())).then_with(|| {
        if ma == mb {
            return Ordering::Equal;
        }
        // the mask holding the lowest differing bit has the smaller element there
        let low = (ma ^ mb).trailing_zeros();
        if ma >> low & 1 == 1 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    })
}

/// Maximum of [`optimal_a`] over every nonempty `B`, for the canonical `mu_n`.
pub fn oracle_sup(n: u32) -> Result<RectWitness> {
    if n > ORACLE_N_MAX {
        return Err(Error::SizeLimit { what: "optimal-A oracle", n: n as u64, max: ORACLE_N_MAX as u64 });
    }
    oracle_sup_for(&build_mu(n)?)
}

pub fn oracle_sup_for(mu: &JNMeasure) -> Result<RectWitness> {
    let n = mu.n();
    if n > ORACLE_N_MAX {
        return Err(Error::SizeLimit { what: "optimal-A oracle", n: n as u64, max: ORACLE_N_MAX as u64 });
    }
    let m = mu.matrix();
    let best = (1u64..1u64 << n)
        .into_par_iter()
        .map(|mask| (positive_part_sum(m, mask), mask))
        .max_by(|a, b| better_mask(*a, *b))
        .expect("n >= 1 gives at least one column set");
    let cols: Vec<u32> = (0..n).filter(|j| best.1 >> j & 1 == 1).collect();
    optimal_a(mu, &cols)
}

/// Exhaustive maximum over every `A` and `B` for the canonical `mu_n`.
pub fn brute_sup(n: u32) -> Result<BigRat> {
    if n > BRUTE_N_MAX {
        return Err(Error::SizeLimit { what: "full rectangle enumeration", n: n as u64, max: BRUTE_N_MAX as u64 });
    }
    brute_sup_for(&build_mu(n)?)
}

pub fn brute_sup_for(mu: &JNMeasure) -> Result<BigRat> {
    let n = mu.n();
    if n > BRUTE_N_MAX {
        return Err(Error::SizeLimit { what: "full rectangle enumeration", n: n as u64, max: BRUTE_N_MAX as u64 });
    }
    let m = mu.matrix();
    let rows = m.num_rows() as u32;
    let mut best: i64 = 0;
    for mask in 0u64..1u64 << n {
        let r: Vec<i64> = (0..m.num_rows()).map(|s| m.row_sum(s, mask)).collect();
        // Gray code over subsets of rows: step t toggles row trailing_zeros(t)
        let mut in_a = vec![false; rows as usize];
        let mut sum: i64 = 0;
        for t in 1u64..1u64 << rows {
            let s = t.trailing_zeros() as usize;
            in_a[s] = !in_a[s];
            sum += if in_a[s] { r[s] } else { -r[s] };
            best = best.max(sum.abs());
        }
    }
    Ok(mu.scale() * BigInt::from(best))
}

/// `B` = all columns, `A` = rows with more plus than minus entries.
pub fn witness_majority(n: u32) -> Result<RectWitness> {
    let mu = build_mu(n)?;
    let m = mu.matrix();
    let full = m.full_mask();
    let rows: Vec<u64> = (0..m.num_rows()).filter(|&s| m.row_sum(s, full) > 0).collect();
    RectWitness::certify(&mu, IndexRectangle::new(rows, (0..n).collect()), sup_closed(n as u64))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundVerdict {
    pub n: u64,
    pub value: BigRat,
    /// `1/(2 sqrt(pi n)) < value`
    pub lower_ok: Certainty,
    /// `value < 2/sqrt(pi n)`
    pub upper_ok: Certainty,
}

impl BoundVerdict {
    pub fn both(&self) -> Certainty {
        self.lower_ok.and(self.upper_ok)
    }
}

/// `1/(2 sqrt(pi n)) < sup_closed(n) < 2/sqrt(pi n)`, squared and certified.
pub fn check_bound4(n: u64, pi: &PiInterval) -> BoundVerdict {
    bound4_from_value(n, sup_closed(n), pi)
}

fn bound4_from_value(n: u64, value: BigRat, pi: &PiInterval) -> BoundVerdict {
    let v2n = &value * &value * BigInt::from(n);
    // v^2 4n pi > 1 and v^2 n pi < 4
    let lower_ok = pi_times_gt(&(&v2n * BigInt::from(4)), &BigRat::one(), pi);
    let upper_ok = pi_times_lt(&v2n, &BigRat::from_integer(BigInt::from(4)), pi);
    BoundVerdict { n, value, lower_ok, upper_ok }
}

/// [`check_bound4`] for `n = 1..=n_max`, walking the closed form incrementally.
pub fn bound4_table(n_max: u64, pi: &PiInterval) -> Vec<BoundVerdict> {
    SClosedSeq::new()
        .take(n_max as usize)
        .map(|(n, s)| {
            // with v = S/(n 2^n): 4 S^2 pi > n 4^n and S^2 pi < 4 n 4^n
            let s2 = &s * &s;
            let n4n = BigInt::from(n) * pow2(2 * n);
            let lower_ok = int_pi_gt(&(&s2 * 4), &n4n, pi);
            let upper_ok = int_pi_lt(&s2, &(&n4n * 4), pi);
            BoundVerdict { n, value: BigRat::new(s, BigInt::from(n) * pow2(n)), lower_ok, upper_ok }
        })
        .collect()
}

/// `(m/n)/sqrt(pi (m+1)) < sup_fixed_b(n, k) < (m/n)/sqrt(pi m)` with `m = ceil(k/2)`.
pub fn check_fixed_b_sandwich(n: u32, k: u32, pi: &PiInterval) -> Result<Certainty> {
    let v = sup_fixed_b(n, k)?;
    let m = ceil_half(k as u64);
    let mn = BigRat::new(BigInt::from(m), BigInt::from(n));
    let mn2 = &mn * &mn;
    let v2 = &v * &v;
    // v^2 pi (m+1) > (m/n)^2  and  v^2 pi m < (m/n)^2
    let lower = pi_times_gt(&(&v2 * BigInt::from(m + 1)), &mn2, pi);
    let upper = pi_times_lt(&(&v2 * BigInt::from(m)), &mn2, pi);
    Ok(lower.and(upper))
}

/// Rational approximations of `1/(2 sqrt(pi n))` and `2/sqrt(pi n)` for
/// display only.
pub fn bound4_display(n: u64, pi: &PiInterval) -> (BigRat, BigRat) {
    let mid = (&pi.lo + &pi.hi) / BigInt::from(2);
    let (root, _) = sqrt_bracket(&(mid * BigInt::from(n)), 20);
    if root.is_zero() {
        return (BigRat::zero(), BigRat::zero());
    }
    let inv = BigRat::one() / root;
    (&inv / BigInt::from(2), inv * BigInt::from(2))
}

/// One line of the `bounds` table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsRow {
    pub n: u64,
    pub sup_closed: String,
    pub sup_decimal: String,
    pub lower_bound: String,
    pub upper_bound: String,
    pub lower_verdict: Certainty,
    pub upper_verdict: Certainty,
}

impl BoundsRow {
    pub fn new(v: &BoundVerdict, pi: &PiInterval) -> Self {
        let (lo, hi) = bound4_display(v.n, pi);
        BoundsRow {
            n: v.n,
            sup_closed: fmt_rat(&v.value),
            sup_decimal: to_decimal(&v.value, 12),
            lower_bound: to_decimal(&lo, 12),
            upper_bound: to_decimal(&hi, 12),
            lower_verdict: v.lower_ok,
            upper_verdict: v.upper_ok,
        }
    }

    pub const HEADER: [&'static str; 7] =
        ["n", "sup_closed", "sup_decimal", "lower_bound", "upper_bound", "lower_verdict", "upper_verdict"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.sup_closed.clone(),
            self.sup_decimal.clone(),
            self.lower_bound.clone(),
            self.upper_bound.clone(),
            self.lower_verdict.to_string(),
            self.upper_verdict.to_string(),
        ]
    }
}
