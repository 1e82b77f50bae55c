//! Exact integer and rational arithmetic for the combinatorial identities,
//! Wallis products and `pi`-interval certification.
//!
//! Rationals are `num_rational::BigRational` (always reduced, positive
//! denominator). Nothing in this module touches floating point; the decimal
//! renderer is exact up to its final rounding.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type BigRat = num_rational::BigRational;

/// `pi` to 125 decimal places. Intervals never use more than 120.
const PI_DIGITS: &str = "3.\
14159265358979323846264338327950288419716939937510\
58209749445923078164062862089986280348253421170679\
8214808651328230664709384460955";

pub const MAX_PI_DIGITS: u32 = 120;

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

pub fn rat(num: i64, den: i64) -> BigRat {
    BigRat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: BigInt) -> BigRat {
    BigRat::from_integer(v)
}

pub fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}

/// Always `p/q`, including integers (`3/1`) and zero (`0/1`).
pub fn fmt_rat(r: &BigRat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q`, a bare integer `p`, or a finite decimal such as `-0.125`.
pub fn parse_rat(s: &str) -> Result<BigRat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRat::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let digits = format!("{whole_digits}{frac}");
        let mag: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRat::new(mag, den);
        return Ok(if negative { -r } else { r });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRat::from_integer(p))
}

/// Scientific rendering with `sig` significant digits, e.g. `1.87500000000e-1`.
/// Non-authoritative: use [`fmt_rat`] for values of record.
pub fn to_decimal(r: &BigRat, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return format!("{}e0", pad_mantissa("0", sig));
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let a = r.abs();
    let ten = BigRat::from_integer(BigInt::from(10));
    // exponent e with 10^e <= a < 10^(e+1)
    let mut e: i64 = (a.numer().bits() as i64 - a.denom().bits() as i64) * 3 / 10;
    loop {
        let p = pow10_rat(e);
        if p > a {
            e -= 1;
        } else if &p * &ten <= a {
            e += 1;
        } else {
            break;
        }
    }
    let scaled = &a / pow10_rat(e - (sig as i64 - 1));
    let mut digits = round_half_up(&scaled);
    if digits >= num_traits::pow(BigInt::from(10), sig) {
        digits /= 10;
        e += 1;
    }
    let d = digits.to_string();
    format!("{sign}{}e{e}", pad_mantissa(&d, sig))
}

fn pad_mantissa(d: &str, sig: usize) -> String {
    let mut d = d.to_string();
    while d.len() < sig {
        d.push('0');
    }
    if sig == 1 {
        d
    } else {
        format!("{}.{}", &d[..1], &d[1..])
    }
}

fn pow10_rat(e: i64) -> BigRat {
    let p = num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRat::from_integer(p)
    } else {
        BigRat::new(BigInt::one(), p)
    }
}

fn round_half_up(r: &BigRat) -> BigInt {
    let t = r + BigRat::new(BigInt::one(), BigInt::from(2));
    t.numer().div_floor(t.denom())
}

/// Binomial coefficient `C(k, i)`, zero outside `0 <= i <= k`.
///
/// Multiplicative formula; each step divides out `gcd(acc, t)` first so the
/// remaining division is by a small cofactor.
pub fn binom(k: u64, i: i64) -> BigInt {
    if i < 0 || i as u64 > k {
        return BigInt::zero();
    }
    let i = (i as u64).min(k - i as u64);
    let mut acc = BigInt::one();
    for t in 1..=i {
        let t_big = BigInt::from(t);
        let g = acc.gcd(&t_big);
        acc /= &g;
        let rest = &t_big / &g;
        let factor = BigInt::from(k - i + t);
        acc = acc * factor / rest;
    }
    acc
}

pub fn ceil_half(k: u64) -> u64 {
    k.div_ceil(2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SIdentity {
    pub sum_value: BigInt,
    pub closed_value: BigInt,
}

impl SIdentity {
    pub fn holds(&self) -> bool {
        self.sum_value == self.closed_value
    }
}

/// `S_k = sum_{i >= ceil(k/2)} (2i - k) C(k, i)`, term by term, alongside the
/// closed form `ceil(k/2) C(k, ceil(k/2))`.
pub fn s_identity(k: u64) -> SIdentity {
    assert!(k >= 1, "s_identity needs k >= 1");
    let lo = ceil_half(k);
    // walk the row of Pascal's triangle from i = lo upwards
    let mut c = binom(k, lo as i64);
    let mut sum = BigInt::zero();
    for i in lo..=k {
        sum += &c * BigInt::from(2 * i as i64 - k as i64);
        if i < k {
            c = c * BigInt::from(k - i) / BigInt::from(i + 1);
        }
    }
    SIdentity { sum_value: sum, closed_value: s_closed(k) }
}

/// `ceil(k/2) C(k, ceil(k/2))`.
pub fn s_closed(k: u64) -> BigInt {
    let m = ceil_half(k);
    binom(k, m as i64) * BigInt::from(m)
}

/// `g(k) = S_k / 2^k`.
pub fn g_value(k: u64) -> BigRat {
    BigRat::new(s_closed(k), pow2(k))
}

/// Successive values `(k, S_k)` for `k = 1, 2, ...` in O(1) big-integer
/// operations per step.
#[derive(Clone, Debug)]
pub struct SClosedSeq {
    k: u64,
    // C(k, ceil(k/2)) for the current k
    central: BigInt,
}

impl SClosedSeq {
    pub fn new() -> Self {
        SClosedSeq { k: 0, central: BigInt::one() }
    }
}

impl Default for SClosedSeq {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for SClosedSeq {
    type Item = (u64, BigInt);

    fn next(&mut self) -> Option<Self::Item> {
        // C(2m-1, m) -> C(2m, m) doubles; C(2m, m) -> C(2m+1, m+1) scales by (2m+1)/(m+1)
        let k = self.k;
        if k % 2 == 1 {
            self.central <<= 1;
        } else {
            let m = k / 2;
            self.central = &self.central * BigInt::from(2 * m + 1) / BigInt::from(m + 1);
        }
        self.k = k + 1;
        let s = &self.central * BigInt::from(ceil_half(self.k));
        Some((self.k, s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wallis {
    /// `W_m`, decreasing to `2/pi`.
    pub upper_seq: BigRat,
    /// `2m/(2m+1) W_m`, increasing to `2/pi`.
    pub lower_seq: BigRat,
}

/// Wallis partial product `W_m = prod_{i=1}^m (2i-1)(2i+1)/(2i)^2` and its
/// lower companion.
pub fn wallis(m: u64) -> Wallis {
    assert!(m >= 1, "wallis needs m >= 1");
    let mut w = BigRat::one();
    for i in 1..=m {
        let i = BigInt::from(i);
        let two_i = &i * 2;
        w *= BigRat::new((&two_i - 1) * (&two_i + 1), &two_i * &two_i);
    }
    let lower = &w * BigRat::new(BigInt::from(2 * m), BigInt::from(2 * m + 1));
    Wallis { upper_seq: w, lower_seq: lower }
}

/// `(2m+1) C(2m, m)^2 / 16^m`.
pub fn wallis_closed(m: u64) -> BigRat {
    let c = binom(2 * m, m as i64);
    BigRat::new(&c * &c * BigInt::from(2 * m + 1), pow2(4 * m))
}

/// Central binomials `(m, C(2m, m))` for `m = 1, 2, ...`.
#[derive(Clone, Debug)]
pub struct CentralBinomSeq {
    m: u64,
    c: BigInt,
}

impl CentralBinomSeq {
    pub fn new() -> Self {
        CentralBinomSeq { m: 0, c: BigInt::one() }
    }
}

impl Default for CentralBinomSeq {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for CentralBinomSeq {
    type Item = (u64, BigInt);

    fn next(&mut self) -> Option<Self::Item> {
        let m = self.m;
        self.c = &self.c * BigInt::from(2 * (2 * m + 1)) / BigInt::from(m + 1);
        self.m = m + 1;
        Some((self.m, self.c.clone()))
    }
}

/// Directed rational enclosure of `pi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiInterval {
    pub lo: BigRat,
    pub hi: BigRat,
    pub digits: u32,
}

impl PiInterval {
    pub fn width(&self) -> BigRat {
        &self.hi - &self.lo
    }
}

/// `pi` truncated to `digits` decimals (`lo`) and `lo + 10^-digits` (`hi`).
pub fn pi_interval(digits: u32) -> Result<PiInterval> {
    if digits == 0 || digits > MAX_PI_DIGITS {
        return Err(Error::PrecisionUnavailable { digits });
    }
    let (whole, frac) = PI_DIGITS.split_once('.').expect("embedded pi has a point");
    let truncated = format!("{whole}{}", &frac[..digits as usize]);
    let den = num_traits::pow(BigInt::from(10), digits as usize);
    let lo_num: BigInt = truncated.parse().expect("embedded pi digits");
    let lo = BigRat::new(lo_num.clone(), den.clone());
    let hi = BigRat::new(lo_num + 1, den);

    // validate against the full embedded expansion
    let full_den = num_traits::pow(BigInt::from(10), frac.len());
    let full_num: BigInt = format!("{whole}{frac}").parse().expect("embedded pi digits");
    let full_lo = BigRat::new(full_num.clone(), full_den.clone());
    let full_hi = BigRat::new(full_num + 1, full_den);
    debug_assert!(lo < full_lo || (lo == full_lo && frac.len() as u32 > digits));
    if !(lo <= full_lo && full_hi <= hi && lo < hi) {
        return Err(Error::PrecisionUnavailable { digits });
    }
    Ok(PiInterval { lo, hi, digits })
}

/// Outcome of a one-sided certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Certainty {
    ProvenStrict,
    ProvenFalse,
    Inconclusive,
}

impl Certainty {
    pub fn is_proven(self) -> bool {
        self == Certainty::ProvenStrict
    }

    /// Conjunction: any refutation wins, then any doubt.
    pub fn and(self, other: Certainty) -> Certainty {
        use Certainty::*;
        match (self, other) {
            (ProvenFalse, _) | (_, ProvenFalse) => ProvenFalse,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => ProvenStrict,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Certainty::ProvenStrict => "ProvenStrict",
            Certainty::ProvenFalse => "ProvenFalse",
            Certainty::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Certainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Certifies `coef * pi > rhs` for `coef >= 0`.
pub fn pi_times_gt(coef: &BigRat, rhs: &BigRat, pi: &PiInterval) -> Certainty {
    debug_assert!(!coef.is_negative());
    if &(coef * &pi.lo) > rhs {
        Certainty::ProvenStrict
    } else if &(coef * &pi.hi) <= rhs {
        Certainty::ProvenFalse
    } else {
        Certainty::Inconclusive
    }
}

/// Certifies `coef * pi < rhs` for `coef >= 0`.
pub fn pi_times_lt(coef: &BigRat, rhs: &BigRat, pi: &PiInterval) -> Certainty {
    debug_assert!(!coef.is_negative());
    if &(coef * &pi.hi) < rhs {
        Certainty::ProvenStrict
    } else if &(coef * &pi.lo) >= rhs {
        Certainty::ProvenFalse
    } else {
        Certainty::Inconclusive
    }
}

/// Integer form of [`pi_times_gt`]: `a * pi > b` with `a, b` integers, `a >= 0`.
pub fn int_pi_gt(a: &BigInt, b: &BigInt, pi: &PiInterval) -> Certainty {
    // a * p/q > b  <=>  a * p > b * q
    let cmp = |r: &BigRat| (a * r.numer()).cmp(&(b * r.denom()));
    if cmp(&pi.lo) == Ordering::Greater {
        Certainty::ProvenStrict
    } else if cmp(&pi.hi) != Ordering::Greater {
        Certainty::ProvenFalse
    } else {
        Certainty::Inconclusive
    }
}

/// Integer form of [`pi_times_lt`]: `a * pi < b` with `a, b` integers, `a >= 0`.
pub fn int_pi_lt(a: &BigInt, b: &BigInt, pi: &PiInterval) -> Certainty {
    let cmp = |r: &BigRat| (a * r.numer()).cmp(&(b * r.denom()));
    if cmp(&pi.hi) == Ordering::Less {
        Certainty::ProvenStrict
    } else if cmp(&pi.lo) != Ordering::Less {
        Certainty::ProvenFalse
    } else {
        Certainty::Inconclusive
    }
}

/// Both sides of `4^m / sqrt(pi (m+1)) < C(2m, m) < 4^m / sqrt(pi m)`,
/// squared: `C^2 pi (m+1) > 16^m` and `C^2 pi m < 16^m`.
pub fn central_binom_bound_check(m: u64, pi: &PiInterval) -> Certainty {
    assert!(m >= 1, "central_binom_bound_check needs m >= 1");
    central_binom_check_with(m, &binom(2 * m, m as i64), pi)
}

fn central_binom_check_with(m: u64, c: &BigInt, pi: &PiInterval) -> Certainty {
    let c2 = c * c;
    let sixteen_m = pow2(4 * m);
    let lower = int_pi_gt(&(&c2 * BigInt::from(m + 1)), &sixteen_m, pi);
    let upper = int_pi_lt(&(&c2 * BigInt::from(m)), &sixteen_m, pi);
    lower.and(upper)
}

/// [`central_binom_bound_check`] for every `m` in `1..=m_max`, incrementally.
pub fn central_binom_bound_table(m_max: u64, pi: &PiInterval) -> Vec<(u64, Certainty)> {
    CentralBinomSeq::new()
        .take(m_max as usize)
        .map(|(m, c)| (m, central_binom_check_with(m, &c, pi)))
        .collect()
}

/// Rational bracket `lo <= sqrt(q) <= hi` with `hi - lo = 1/(den(q) 10^digits)`.
pub fn sqrt_bracket(q: &BigRat, digits: u32) -> (BigRat, BigRat) {
    assert!(!q.is_negative(), "sqrt of a negative rational");
    let scale = num_traits::pow(BigInt::from(10), digits as usize);
    // sqrt(p/d) = sqrt(p d) / d
    let radicand = q.numer() * q.denom() * &scale * &scale;
    let root = radicand.sqrt();
    let den = q.denom() * &scale;
    let lo = BigRat::new(root.clone(), den.clone());
    let hi = if &root * &root == radicand { lo.clone() } else { BigRat::new(root + 1, den) };
    (lo, hi)
}

/// Magnitude of a rational as a non-negative `BigRat`; keeps call sites short.
/// Exact sum of many rationals.
///
/// Terms sharing a denominator are merged first, then the groups are added
/// pairwise, which keeps intermediate denominators balanced when thousands
/// of distinct denominators occur.
pub fn exact_sum(terms: impl IntoIterator<Item = BigRat>) -> BigRat {
    exact_sum_parts(terms.into_iter().map(Into::into))
}

/// [`exact_sum`] over unreduced `(numerator, positive denominator)` pairs.
pub fn exact_sum_parts(terms: impl IntoIterator<Item = (BigInt, BigInt)>) -> BigRat {
    let mut groups: std::collections::HashMap<BigInt, BigInt> = std::collections::HashMap::new();
    for (num, den) in terms {
        *groups.entry(den).or_insert_with(BigInt::zero) += num;
    }
    let mut level: Vec<BigRat> = groups
        .into_iter()
        .filter(|(_, num)| !num.is_zero())
        .map(|(den, num)| BigRat::new(num, den))
        .collect();
    // hash order is arbitrary; the exact result is not
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / 2 + 1);
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a + b,
                None => a,
            });
        }
        level = next;
    }
    level.pop().unwrap_or_else(BigRat::zero)
}

pub fn abs(r: &BigRat) -> BigRat {
    if r.numer().sign() == Sign::Minus {
        -r
    } else {
        r.clone()
    }
}

/// Outcome of the combinatorial identity checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub k_max: u64,
    pub m_max: u64,
    /// rows built by Pascal's rule agree with the multiplicative formula
    pub pascal: bool,
    /// `i C(k, i) = k C(k-1, i-1)` for all `1 <= i <= k <= k_max`
    pub absorption: bool,
    /// term-by-term `S_k` equals the closed form for `k <= k_max`
    pub s_identity: bool,
    /// `g(k) <= g(k+1)` for `k < k_max`
    pub g_monotone: bool,
    /// the Wallis product decreases and its companion increases, `m <= m_max`
    pub wallis_monotone: bool,
    /// both Wallis sequences straddle `2/pi` for every `m <= m_max`
    pub wallis_bracket: Certainty,
    /// running product equals `(2m+1) C(2m, m)^2 / 16^m` for small `m`
    pub wallis_closed: bool,
    /// `W_m - (2m/(2m+1)) W_m` at `m = m_max`
    pub wallis_width: BigRat,
    pub central_binom: Certainty,
}

impl IdentityReport {
    /// Width below `tol` bounds the distance of both sequences to `2/pi`.
    pub fn wallis_within(&self, tol: &BigRat) -> bool {
        self.wallis_bracket.is_proven() && &self.wallis_width < tol
    }

    pub fn verdict(&self, tol: &BigRat) -> Certainty {
        let exact = self.pascal
            && self.absorption
            && self.s_identity
            && self.g_monotone
            && self.wallis_monotone
            && self.wallis_closed
            && &self.wallis_width < tol;
        let exact = if exact { Certainty::ProvenStrict } else { Certainty::ProvenFalse };
        exact.and(self.wallis_bracket).and(self.central_binom)
    }
}

/// Identity suite over `k <= k_max` (binomial facts, `S_k`, `g`) and
/// `m <= m_max` (Wallis, central binomial bounds).
pub fn identity_suite(k_max: u64, m_max: u64, pi: &PiInterval) -> IdentityReport {
    let mut pascal = true;
    let mut absorption = true;
    let mut row = vec![BigInt::one()];
    for k in 1..=k_max {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(BigInt::one());
        for i in 1..row.len() {
            next.push(&row[i - 1] + &row[i]);
        }
        next.push(BigInt::one());
        for i in 1..=k as usize {
            absorption &= &next[i] * BigInt::from(i) == &row[i - 1] * BigInt::from(k);
        }
        let probes: Vec<u64> = if k <= 64 { (0..=k).collect() } else { vec![0, 1, k / 3, k / 2, k] };
        pascal &= probes.iter().all(|&i| next[i as usize] == binom(k, i as i64));
        row = next;
    }

    let s_identity = (1..=k_max).all(|k| s_identity(k).holds());
    let mut g_monotone = true;
    let mut prev: Option<BigInt> = None;
    for (_, s) in SClosedSeq::new().take(k_max as usize) {
        // g(k+1) >= g(k)  <=>  S_(k+1) >= 2 S_k
        if let Some(p) = &prev {
            g_monotone &= s >= p * 2;
        }
        prev = Some(s);
    }

    let mut wallis_monotone = true;
    let mut wallis_bracket = Certainty::ProvenStrict;
    let mut last: Option<(u64, BigInt)> = None;
    let mut wallis_width = BigRat::zero();
    for (m, c) in CentralBinomSeq::new().take(m_max as usize) {
        let c2 = &c * &c;
        let sixteen_m = pow2(4 * m);
        // W_m = (2m+1) c^2 / 16^m and L_m = 2m c^2 / 16^m against 2/pi
        let upper = int_pi_gt(&(&c2 * BigInt::from(2 * m + 1)), &(&sixteen_m * 2), pi);
        let lower = int_pi_lt(&(&c2 * BigInt::from(2 * m)), &(&sixteen_m * 2), pi);
        wallis_bracket = wallis_bracket.and(upper).and(lower);
        if let Some((pm, pc2)) = &last {
            // W_m < W_(m-1): (2m+1) c^2 < 16 (2pm+1) pc^2; L_m > L_(m-1): 2m c^2 > 16 2pm pc^2
            wallis_monotone &= &c2 * BigInt::from(2 * m + 1) < pc2 * BigInt::from(16 * (2 * pm + 1));
            wallis_monotone &= &c2 * BigInt::from(2 * m) > pc2 * BigInt::from(32 * pm);
        }
        if m == m_max {
            wallis_width = BigRat::new(c2.clone(), sixteen_m);
        }
        last = Some((m, c2));
    }
    let wallis_closed = (1..=m_max.min(100)).all(|m| wallis(m).upper_seq == wallis_closed(m));
    let central_binom = central_binom_bound_table(m_max, pi)
        .into_iter()
        .fold(Certainty::ProvenStrict, |acc, (_, c)| acc.and(c));

    IdentityReport {
        k_max,
        m_max,
        pascal,
        absorption,
        s_identity,
        g_monotone,
        wallis_monotone,
        wallis_bracket,
        wallis_closed,
        wallis_width,
        central_binom,
    }
}
