//! Decay of `mu_n` on product and sum functions, convergence tables,
//! strongly-normal partial sums, and the construction for arbitrary block
//! sizes.
//!
//! Every bound below involves `1/sqrt(pi n)`. Such factors are bracketed by
//! rationals (integer square roots combined with a `pi` interval), and a
//! verdict is `ProvenHolds` only when the exact left-hand side sits at or
//! below the certified floor of the right-hand side.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{fmt_rat, pi_times_lt, sqrt_bracket, to_decimal, BigRat, Certainty, PiInterval};
use crate::measures::{
    build_mu, configured_n_max, eval_rectangle, eval_sum, eval_tensor, AxisFunction, IndexRectangle, JNMeasure,
    SignMatrix,
};
use crate::rectopt::{check_bound4, sup_closed};
use crate::spaces::{block_points, integrate, sample, ProductFunction, Side, Table, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DecayVerdict {
    ProvenHolds,
    ProvenFails,
    Inconclusive,
}

impl DecayVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayVerdict::ProvenHolds => "ProvenHolds",
            DecayVerdict::ProvenFails => "ProvenFails",
            DecayVerdict::Inconclusive => "Inconclusive",
        }
    }

    pub fn and(self, other: DecayVerdict) -> DecayVerdict {
        use DecayVerdict::*;
        match (self, other) {
            (ProvenFails, _) | (_, ProvenFails) => ProvenFails,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => ProvenHolds,
        }
    }
}

impl fmt::Display for DecayVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rational bracket `lo <= 8/sqrt(pi n) <= hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayFactor {
    pub lo: BigRat,
    pub hi: BigRat,
}

impl DecayFactor {
    pub fn new(n: u64, pi: &PiInterval) -> Self {
        let digits = pi.digits + 10;
        let n = BigInt::from(n);
        let (_, root_hi) = sqrt_bracket(&(&pi.hi * &n), digits);
        let (root_lo, _) = sqrt_bracket(&(&pi.lo * &n), digits);
        let eight = BigRat::from_integer(BigInt::from(8));
        // rounded outward to `digits` decimals for compact output
        let scale = BigRat::from_integer(num_traits::pow(BigInt::from(10), pi.digits as usize));
        let lo = ((&eight / root_hi) * &scale).floor() / &scale;
        let hi = ((eight / root_lo) * &scale).ceil() / &scale;
        DecayFactor { lo, hi }
    }
}

/// `|mu_n(h)|` against `(8/sqrt(pi)) n^(-1/2) norm`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayReport {
    pub n: u64,
    pub lhs: BigRat,
    pub norm: BigRat,
    /// proven lower bound of the right-hand side
    pub rhs_certified_floor: BigRat,
    pub verdict: DecayVerdict,
}

impl DecayReport {
    pub fn judge(n: u64, lhs: BigRat, norm: BigRat, factor: &DecayFactor) -> Self {
        let floor = &factor.lo * &norm;
        let verdict = if lhs <= floor {
            DecayVerdict::ProvenHolds
        } else if lhs > &factor.hi * &norm {
            DecayVerdict::ProvenFails
        } else {
            DecayVerdict::Inconclusive
        };
        DecayReport { n, lhs, norm, rhs_certified_floor: floor, verdict }
    }
}

/// `|mu_n(f (x) g)| <= (8/sqrt(pi)) n^(-1/2) max_{K_n}|f| max_{L_n}|g|`.
///
/// Uses only the block values, which is stronger than the sup norm over the
/// whole factor.
pub fn tensor_bound(mu: &JNMeasure, f: &AxisFunction, g: &AxisFunction, pi: &PiInterval) -> Result<DecayReport> {
    let lhs = eval_tensor(mu, f, g)?.abs();
    let norm = f.sup_norm() * g.sup_norm();
    Ok(DecayReport::judge(mu.n() as u64, lhs, norm, &DecayFactor::new(mu.n() as u64, pi)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumReport {
    /// against `max|f| + max|g|`
    pub proof_form: DecayReport,
    /// against `N = max_{K_n x L_n} |f(s) + g(j)|`
    pub grid_form: DecayReport,
    pub grid_norm: BigRat,
    /// `min_c (max|f + c| + max|g - c|)`
    pub recentered_norm: BigRat,
    pub recentered_shift: BigRat,
}

impl SumReport {
    pub fn recentering_identity_holds(&self) -> bool {
        self.recentered_norm == self.grid_norm
    }

    pub fn verdict(&self) -> DecayVerdict {
        let identity = if self.recentering_identity_holds() {
            DecayVerdict::ProvenHolds
        } else {
            DecayVerdict::ProvenFails
        };
        self.proof_form.verdict.and(self.grid_form.verdict).and(identity)
    }
}

/// `|mu_n(f (+) g)|` against both `max|f| + max|g|` and the grid sup norm
/// of `f (+) g`.
///
/// Since `mu_n(f (+) g) = mu_n((f + c) (+) (g - c))` for every constant `c`,
/// the proof-level bound can be applied after the best shift; that minimum
/// equals the grid norm, which is what lets the sup norm of `f (+) g` replace
/// `max|f| + max|g|`.
pub fn sum_bound(mu: &JNMeasure, f: &AxisFunction, g: &AxisFunction, pi: &PiInterval) -> Result<SumReport> {
    let lhs = eval_sum(mu, f, g)?.abs();
    let n = mu.n() as u64;
    let factor = DecayFactor::new(n, pi);
    let proof_norm = f.sup_norm() + g.sup_norm();
    let (fmin, fmax) = extremes(f)?;
    let (gmin, gmax) = extremes(g)?;
    let grid_norm = (fmax + gmax).max(-(fmin + gmin));
    let (shift, recentered_norm) = best_shift(f, g)?;
    Ok(SumReport {
        proof_form: DecayReport::judge(n, lhs.clone(), proof_norm, &factor),
        grid_form: DecayReport::judge(n, lhs, grid_norm.clone(), &factor),
        grid_norm,
        recentered_norm,
        recentered_shift: shift,
    })
}

fn extremes(f: &AxisFunction) -> Result<(&BigRat, &BigRat)> {
    match (f.min(), f.max()) {
        (Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(Error::Domain("empty sample".into())),
    }
}

/// Minimizes `h(c) = max|f + c| + max|g - c|` over `c`.
///
/// `h` is convex and piecewise linear with breakpoints where `max(f) + c`
/// meets `-(min(f) + c)` and where `max(g) - c` meets `c - min(g)`, so the
/// minimum is attained at one of those two shifts.
pub fn best_shift(f: &AxisFunction, g: &AxisFunction) -> Result<(BigRat, BigRat)> {
    let (fmin, fmax) = extremes(f)?;
    let (gmin, gmax) = extremes(g)?;
    let two = BigInt::from(2);
    let h = |c: &BigRat| {
        let fc = (fmax + c).max(-(fmin + c));
        let gc = (gmax - c).max(c - gmin);
        fc + gc
    };
    let candidates = [-(fmax + fmin) / &two, (gmax + gmin) / &two];
    let best = candidates
        .iter()
        .map(|c| (h(c), c.clone()))
        .min()
        .expect("two candidates");
    Ok((best.1, best.0))
}

/// Uniform random rational `p/q` in `[-1, 1]` with `q <= 100`.
pub fn random_unit_rational(rng: &mut impl Rng) -> BigRat {
    let q: i64 = rng.gen_range(1..=100);
    let p: i64 = rng.gen_range(-q..=q);
    BigRat::new(BigInt::from(p), BigInt::from(q))
}

/// Stream for one trial: same seed, stream id from `(n, trial)`, so results
/// do not depend on scheduling.
pub fn trial_rng(seed: u64, n: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | trial as u64);
    rng
}

pub fn random_axis(rng: &mut impl Rng, len: usize) -> AxisFunction {
    AxisFunction::new((0..len).map(|_| random_unit_rational(rng)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrialForm {
    Tensor,
    Sum,
}

/// One row of the trials CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRow {
    pub seed: u64,
    pub n: u32,
    pub trial: u32,
    pub lhs: BigRat,
    pub rhs_floor: BigRat,
    pub verdict: DecayVerdict,
}

impl TrialRow {
    pub const HEADER: [&'static str; 5] = ["seed", "n", "lhs", "rhs_floor", "verdict"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.n.to_string(),
            fmt_rat(&self.lhs),
            fmt_rat(&self.rhs_floor),
            self.verdict.to_string(),
        ]
    }
}

/// Random `(f, g)` pairs on the blocks of `mu_n` for each `n`, in `(n, trial)` order.
pub fn run_trials(
    form: TrialForm,
    ns: RangeInclusive<u32>,
    trials: u32,
    seed: u64,
    pi: &PiInterval,
) -> Result<Vec<TrialRow>> {
    run_trials_on(form, ns, trials, seed, pi, build_mu)
}

/// [`run_trials`] with a caller-supplied measure for each `n`.
pub fn run_trials_on(
    form: TrialForm,
    ns: RangeInclusive<u32>,
    trials: u32,
    seed: u64,
    pi: &PiInterval,
    measure: impl Fn(u32) -> Result<JNMeasure>,
) -> Result<Vec<TrialRow>> {
    let mut rows = Vec::new();
    for n in ns {
        let mu = measure(n)?;
        let batch: Result<Vec<TrialRow>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(seed, n, trial);
                let f = random_axis(&mut rng, mu.matrix().num_rows() as usize);
                let g = random_axis(&mut rng, n as usize);
                let report = match form {
                    TrialForm::Tensor => tensor_bound(&mu, &f, &g, pi)?,
                    TrialForm::Sum => {
                        let r = sum_bound(&mu, &f, &g, pi)?;
                        let verdict = r.verdict();
                        DecayReport { verdict, ..r.grid_form }
                    }
                };
                Ok(TrialRow { seed, n, trial, lhs: report.lhs, rhs_floor: report.rhs_certified_floor, verdict: report.verdict })
            })
            .collect();
        rows.extend(batch?);
    }
    Ok(rows)
}

/// One row of the convergence CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub value: BigRat,
    /// certified upper bound on `|value|`, when one applies
    pub bound: Option<BigRat>,
    pub verdict: Option<DecayVerdict>,
}

impl ConvergenceRow {
    pub const HEADER: [&'static str; 4] = ["n", "value_exact", "value_decimal", "bound_decimal"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_rat(&self.value),
            to_decimal(&self.value, 12),
            self.bound.as_ref().map(|b| to_decimal(b, 12)).unwrap_or_default(),
        ]
    }
}

/// `mu_n(f)` for each `n`, with the applicable bound:
///
/// * clopen rectangles: `|mu_n(f)| <= sup_closed(n)`, and `sup_closed(n) < 2/sqrt(pi n)`;
/// * other products `f (x) g`: the decay bound;
/// * sums `f (+) g`: the decay bound against the grid norm.
pub fn convergence_table(f: &ProductFunction, ns: RangeInclusive<u32>, pi: &PiInterval) -> Result<Vec<ConvergenceRow>> {
    ns.map(|n| convergence_row(f, n, pi)).collect()
}

fn convergence_row(f: &ProductFunction, n: u32, pi: &PiInterval) -> Result<ConvergenceRow> {
    let mu = build_mu(n)?;
    if f.as_rectangle().is_some() {
        let value = integrate(&mu, f)?;
        let sup = sup_closed(n as u64);
        let within = value.abs() <= sup;
        let bound4 = check_bound4(n as u64, pi).upper_ok;
        let verdict = match (within, bound4) {
            (false, _) | (_, Certainty::ProvenFalse) => DecayVerdict::ProvenFails,
            (true, Certainty::ProvenStrict) => DecayVerdict::ProvenHolds,
            _ => DecayVerdict::Inconclusive,
        };
        return Ok(ConvergenceRow { n, value, bound: Some(sup), verdict: Some(verdict) });
    }
    let factor = DecayFactor::new(n as u64, pi);
    match f {
        ProductFunction::Tensor(fk, gl) => {
            let (fv, _) = sample(fk, Side::K, n);
            let (gv, _) = sample(gl, Side::L, n);
            let report = tensor_bound(&mu, &fv, &gv, pi)?;
            let value = eval_tensor(&mu, &fv, &gv)?;
            Ok(ConvergenceRow { n, value, bound: Some(&factor.hi * &report.norm), verdict: Some(report.verdict) })
        }
        ProductFunction::Sum(fk, gl) => {
            let (fv, _) = sample(fk, Side::K, n);
            let (gv, _) = sample(gl, Side::L, n);
            let report = sum_bound(&mu, &fv, &gv, pi)?;
            let value = eval_sum(&mu, &fv, &gv)?;
            Ok(ConvergenceRow { n, value, bound: Some(&factor.hi * &report.grid_norm), verdict: Some(report.verdict()) })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StronglyNormalReport {
    pub subsequence: Vec<u32>,
    pub terms: Vec<BigRat>,
    pub partial_sum: BigRat,
    /// certified lower bound of `(8/sqrt(pi)) sum_s s^(-1/2) max|f| max|g|`
    pub bound_floor: BigRat,
    pub bound_ceil: BigRat,
    pub verdict: DecayVerdict,
}

/// `sum_s |mu_s(f (x) g)|` over a strictly increasing subsequence, against the
/// sum of the per-term decay bounds (block norms per term).
pub fn strongly_normal_partial(
    subseq: &[u32],
    f: &TestFunction,
    g: &TestFunction,
    pi: &PiInterval,
) -> Result<StronglyNormalReport> {
    let n_max = configured_n_max();
    if subseq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("subsequence must be strictly increasing".into()));
    }
    if let Some(&s) = subseq.iter().find(|&&s| s == 0 || s > n_max) {
        return Err(Error::SizeLimit { what: "strongly normal subsequence entry", n: s as u64, max: n_max as u64 });
    }
    let mut terms = Vec::with_capacity(subseq.len());
    let mut floor = BigRat::zero();
    let mut ceil = BigRat::zero();
    for &s in subseq {
        let mu = build_mu(s)?;
        let (fv, fnorm) = sample(f, Side::K, s);
        let (gv, gnorm) = sample(g, Side::L, s);
        terms.push(eval_tensor(&mu, &fv, &gv)?.abs());
        let factor = DecayFactor::new(s as u64, pi);
        let norm = fnorm * gnorm;
        floor += &factor.lo * &norm;
        ceil += &factor.hi * &norm;
    }
    let partial_sum = terms.iter().fold(BigRat::zero(), |a, t| a + t);
    let verdict = if partial_sum <= floor {
        DecayVerdict::ProvenHolds
    } else if partial_sum > ceil {
        DecayVerdict::ProvenFails
    } else {
        DecayVerdict::Inconclusive
    };
    Ok(StronglyNormalReport { subsequence: subseq.to_vec(), terms, partial_sum, bound_floor: floor, bound_ceil: ceil, verdict })
}

/// A random continuous function on the model: random values on the listed
/// blocks, a random limit value everywhere else.
pub fn random_block_function(rng: &mut impl Rng, side: Side, blocks: &[u32]) -> TestFunction {
    let limit = random_unit_rational(rng);
    let entries: Vec<(BigRat, BigRat)> = blocks
        .iter()
        .flat_map(|&n| block_points(side, n))
        .map(|x| (x, random_unit_rational(rng)))
        .collect();
    TestFunction::Tabulated(Table::new(entries, limit, None))
}

/// Stage thresholds `phi_1 < phi_2 < ...` for a finite prefix of sizes
/// `(a_n, b_n)`, `n = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Staircase {
    sizes: Vec<(u64, u64)>,
    /// `thresholds[m - 1] = phi_m`
    thresholds: Vec<u64>,
}

impl Staircase {
    /// `phi_m` is the least index from which every later prefix entry has
    /// `a >= 2^m` and `b >= m`, then raised to make the sequence strictly
    /// increasing.
    pub fn new(sizes: &[(u64, u64)]) -> Result<Self> {
        let len = sizes.len() as u64;
        let mut thresholds: Vec<u64> = Vec::new();
        for m in 1u32..64 {
            let need_a = 1u64 << m;
            let need_b = m as u64;
            // last failing index (1-based), scanning from the end
            let last_fail = sizes.iter().rposition(|&(a, b)| a < need_a || b < need_b).map(|i| i as u64 + 1);
            let least = last_fail.map_or(1, |i| i + 1);
            if least > len {
                break;
            }
            let phi = match thresholds.last() {
                Some(&prev) => least.max(prev + 1),
                None => least,
            };
            if phi > len {
                break;
            }
            thresholds.push(phi);
        }
        if thresholds.is_empty() {
            return Err(Error::InsufficientData(
                "the size prefix never reaches a_n >= 2 and b_n >= 1 for good".into(),
            ));
        }
        Ok(Staircase { sizes: sizes.to_vec(), thresholds })
    }

    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }

    /// `m(n)`: largest `m` with `phi_m <= n`, or `0` before the first stage.
    pub fn stage(&self, n: u64) -> Result<u32> {
        if n == 0 || n > self.sizes.len() as u64 {
            return Err(Error::InsufficientData(format!(
                "index {n} is outside the size prefix of length {}",
                self.sizes.len()
            )));
        }
        Ok(self.thresholds.iter().take_while(|&&phi| phi <= n).count() as u32)
    }

    pub fn sizes(&self) -> &[(u64, u64)] {
        &self.sizes
    }
}

/// The measure at index `n` of the generalized sequence, embedded in the
/// model with block `n` of each factor placed right after blocks `1..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedMeasure {
    pub n: u64,
    pub stage: u32,
    pub k_offset: BigInt,
    pub l_offset: BigInt,
    pub block_sizes: (u64, u64),
    /// `None` before the first stage: a unit point mass at the first cell
    pub block: Option<JNMeasure>,
}

pub fn generalized_sequence(sizes: &[(u64, u64)], n: u64) -> Result<GeneralizedMeasure> {
    generalized_from(&Staircase::new(sizes)?, n)
}

pub fn generalized_from(stairs: &Staircase, n: u64) -> Result<GeneralizedMeasure> {
    let stage = stairs.stage(n)?;
    let sizes = stairs.sizes();
    let (a, b) = sizes[n as usize - 1];
    if a == 0 || b == 0 {
        return Err(Error::Domain(format!("block {n} is empty")));
    }
    let k_offset = sizes[..n as usize - 1].iter().fold(BigInt::zero(), |acc, &(a, _)| acc + a);
    let l_offset = sizes[..n as usize - 1].iter().fold(BigInt::zero(), |acc, &(_, b)| acc + b);
    let block = if stage == 0 { None } else { Some(JNMeasure::from_matrix(SignMatrix::canonical_with_limit(stage, configured_n_max())?)) };
    Ok(GeneralizedMeasure { n, stage, k_offset, l_offset, block_sizes: (a, b), block })
}

impl GeneralizedMeasure {
    fn point(offset: &BigInt, idx: u64) -> BigRat {
        BigRat::new(BigInt::one(), offset + idx + 1)
    }

    pub fn k_point(&self, idx: u64) -> BigRat {
        Self::point(&self.k_offset, idx)
    }

    pub fn l_point(&self, idx: u64) -> BigRat {
        Self::point(&self.l_offset, idx)
    }

    /// Atoms `(x, y, weight)`; rows and columns are the first `2^m` and `m`
    /// indices of the block.
    pub fn atoms(&self) -> Vec<(BigRat, BigRat, BigRat)> {
        match &self.block {
            None => vec![(self.k_point(0), self.l_point(0), BigRat::one())],
            Some(mu) => mu
                .atoms()
                .map(|(s, j, sign)| (self.k_point(s), self.l_point(j as u64), mu.scale() * BigInt::from(sign)))
                .collect(),
        }
    }

    pub fn norm(&self) -> BigRat {
        self.atoms().iter().fold(BigRat::zero(), |acc, (_, _, w)| acc + w.abs())
    }

    /// Every atom lies in block `n` of both factors.
    pub fn support_within_blocks(&self) -> bool {
        let (a, b) = self.block_sizes;
        let (rows, cols) = match &self.block {
            None => (1, 1),
            Some(mu) => (mu.matrix().num_rows(), mu.n() as u64),
        };
        rows <= a && cols <= b
    }

    /// `mu_n(A x B)` for index sets of block `n`; indices beyond the support
    /// sub-grid simply miss every atom.
    pub fn eval_block_rectangle(&self, rows: &[u64], cols: &[u64]) -> Result<BigRat> {
        let (a, b) = self.block_sizes;
        if rows.iter().any(|&s| s >= a) || cols.iter().any(|&j| j >= b) {
            return Err(Error::Domain(format!("rectangle leaves the {a}x{b} block")));
        }
        match &self.block {
            None => Ok(if rows.contains(&0) && cols.contains(&0) { BigRat::one() } else { BigRat::zero() }),
            Some(mu) => {
                let r: Vec<u64> = rows.iter().copied().filter(|&s| s < mu.matrix().num_rows()).collect();
                let c: Vec<u32> = cols.iter().copied().filter(|&j| j < mu.n() as u64).map(|j| j as u32).collect();
                eval_rectangle(mu, &IndexRectangle::new(r, c))
            }
        }
    }

    /// `|value| < (2/sqrt(pi)) m^(-1/2)` for this stage, i.e. `value^2 pi m < 4`.
    /// Not applicable before the first stage.
    pub fn envelope_check(&self, value: &BigRat, pi: &PiInterval) -> Option<Certainty> {
        (self.stage > 0).then(|| {
            let lhs = value * value * BigInt::from(self.stage);
            pi_times_lt(&lhs, &BigRat::from_integer(BigInt::from(4)), pi)
        })
    }
}

/// One line of the generalized-construction table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedRow {
    pub n: u64,
    pub stage: u32,
    pub norm: BigRat,
    pub support_ok: bool,
    /// largest `|mu_n(A x B)|` over the tested rectangles
    pub max_value: BigRat,
    pub tested: u32,
    /// `None` before the first stage
    pub envelope: Option<Certainty>,
    /// `Some` when block `n` has sizes `(2^n, n)` and stage `n`: atoms equal those of `mu_n`
    pub matches_mu: Option<bool>,
}

impl GeneralizedRow {
    pub const HEADER: [&'static str; 7] = ["n", "stage", "norm", "support_ok", "max_value", "tested", "envelope"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.stage.to_string(),
            fmt_rat(&self.norm),
            self.support_ok.to_string(),
            fmt_rat(&self.max_value),
            self.tested.to_string(),
            self.envelope.map_or_else(|| "n/a".to_string(), |c| c.to_string()),
        ]
    }

    pub fn holds(&self) -> Certainty {
        let exact = self.norm.is_one() && self.support_ok && self.matches_mu != Some(false);
        let exact = if exact { Certainty::ProvenStrict } else { Certainty::ProvenFalse };
        exact.and(self.envelope.unwrap_or(Certainty::ProvenStrict))
    }
}

/// Every index of the prefix: norm, support, the optimal rectangle of the
/// stage block and `random_rects` seeded random rectangles of the whole block.
pub fn generalized_table(sizes: &[(u64, u64)], seed: u64, random_rects: u32, pi: &PiInterval) -> Result<Vec<GeneralizedRow>> {
    let stairs = Staircase::new(sizes)?;
    (1..=sizes.len() as u64)
        .into_par_iter()
        .map(|n| generalized_row(&stairs, n, seed, random_rects, pi))
        .collect()
}

fn generalized_row(stairs: &Staircase, n: u64, seed: u64, random_rects: u32, pi: &PiInterval) -> Result<GeneralizedRow> {
    let g = generalized_from(stairs, n)?;
    let (a, b) = g.block_sizes;
    let (rows, cols) = match &g.block {
        None => (1u64, 1u64),
        Some(mu) => (mu.matrix().num_rows(), mu.n() as u64),
    };
    let mut rects: Vec<(Vec<u64>, Vec<u64>)> = Vec::new();
    if let Some(mu) = &g.block {
        let full = mu.matrix().full_mask();
        let best: Vec<u64> = (0..rows).filter(|&s| mu.matrix().row_sum(s, full) > 0).collect();
        rects.push((best, (0..b).collect()));
    }
    let mut rng = trial_rng(seed, n as u32, u32::MAX);
    for _ in 0..random_rects {
        // the support sub-grid plus one index past it when the block has room
        let r: Vec<u64> = (0..rows.min(a)).filter(|_| rng.gen_bool(0.5)).chain((rows < a).then_some(rows)).collect();
        let c: Vec<u64> = (0..cols.min(b)).filter(|_| rng.gen_bool(0.5)).chain((cols < b).then_some(cols)).collect();
        rects.push((r, c));
    }
    let mut max_value = BigRat::zero();
    for (r, c) in &rects {
        max_value = max_value.max(g.eval_block_rectangle(r, c)?.abs());
    }
    let matches_mu = (g.block_sizes == (1u64 << n.min(62), n) && g.stage as u64 == n).then(|| {
        let mu = build_mu(g.stage).expect("stage within cap");
        let model = |side, idx| crate::spaces::model_point(side, g.stage, idx).expect("block point");
        let matches = g.atoms().into_iter().zip(mu.atoms()).all(|((x, y, w), (s, j, sign))| {
            x == model(Side::K, s) && y == model(Side::L, j as u64) && w == mu.scale() * BigInt::from(sign)
        });
        matches
    });
    Ok(GeneralizedRow {
        n,
        stage: g.stage,
        norm: g.norm(),
        support_ok: g.support_within_blocks(),
        envelope: g.envelope_check(&max_value, pi),
        max_value,
        tested: rects.len() as u32,
        matches_mu,
    })
}

/// Parses `a1:b1,a2:b2,...`, or the generators `id:N` (`a_n = b_n = n`) and
/// `pow2:N` (`a_n = 2^n, b_n = n`) for `n = 1..=N`.
pub fn parse_sizes(spec: &str) -> Result<Vec<(u64, u64)>> {
    let spec = spec.trim();
    let bad = || Error::Parse(format!("bad sizes spec {spec:?}"));
    if let Some(len) = spec.strip_prefix("id:") {
        let len: u64 = len.trim().parse().map_err(|_| bad())?;
        return Ok((1..=len).map(|n| (n, n)).collect());
    }
    if let Some(len) = spec.strip_prefix("pow2:") {
        let len: u64 = len.trim().parse().map_err(|_| bad())?;
        if len > 62 {
            return Err(bad());
        }
        return Ok((1..=len).map(|n| (1u64 << n, n)).collect());
    }
    spec.split(',')
        .map(|pair| {
            let (a, b) = pair.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{pi_interval, rat};
    use crate::spaces::model_point;

    fn pi50() -> PiInterval {
        pi_interval(50).unwrap()
    }

    #[test]
    fn decay_factor_brackets() {
        let pi = pi50();
        for n in [1u64, 2, 10, 1000] {
            let f = DecayFactor::new(n, &pi);
            assert!(f.lo <= f.hi);
            // (8/sqrt(pi n))^2 = 64/(pi n) is bracketed by the interval
            let lo2 = &f.lo * &f.lo * BigInt::from(n);
            let hi2 = &f.hi * &f.hi * BigInt::from(n);
            assert!(lo2 * &pi.lo <= rat(64, 1));
            assert!(hi2 * &pi.hi >= rat(64, 1));
        }
    }

    #[test]
    fn tensor_constant_functions_vanish() {
        let mu = build_mu(5).unwrap();
        let f = AxisFunction::constant(32, rat(1, 1));
        let g = AxisFunction::constant(5, rat(1, 1));
        let r = tensor_bound(&mu, &f, &g, &pi50()).unwrap();
        assert_eq!(r.lhs, rat(0, 1));
        assert_eq!(r.verdict, DecayVerdict::ProvenHolds);
    }

    #[test]
    fn tensor_two_atom_expansion() {
        // mu_1 = (delta_(1,0) - delta_(0,0)) / 2
        let mu = build_mu(1).unwrap();
        let f = AxisFunction::new(vec![rat(3, 7), rat(-5, 4)]);
        let g = AxisFunction::new(vec![rat(-2, 3)]);
        let r = tensor_bound(&mu, &f, &g, &pi50()).unwrap();
        let expected = (rat(2, 3) * (rat(-5, 4) - rat(3, 7)).abs()) / BigInt::from(2);
        assert_eq!(r.lhs, expected);
        assert!(r.lhs <= r.norm);
        assert_eq!(r.verdict, DecayVerdict::ProvenHolds);
    }

    #[test]
    fn tensor_trials_small() {
        let rows = run_trials(TrialForm::Tensor, 1..=6, 50, 7, &pi50()).unwrap();
        assert_eq!(rows.len(), 300);
        assert!(rows.iter().all(|r| r.verdict == DecayVerdict::ProvenHolds));
    }

    #[test]
    fn sum_examples() {
        let mu = build_mu(3).unwrap();
        let f = AxisFunction::constant(8, rat(2, 5));
        let g = AxisFunction::constant(3, rat(-2, 5));
        let r = sum_bound(&mu, &f, &g, &pi50()).unwrap();
        assert_eq!(r.proof_form.lhs, rat(0, 1));
        assert_eq!(r.verdict(), DecayVerdict::ProvenHolds);

        let n = 2;
        let mu = build_mu(n).unwrap();
        let (fv, _) = sample(&TestFunction::identity(), Side::K, n);
        let (gv, _) = sample(&TestFunction::identity(), Side::L, n);
        let r = sum_bound(&mu, &fv, &gv, &pi50()).unwrap();
        // eight-atom expansion by hand: K points 1/3..1/6, L points 1/2, 1/3
        let mut direct = BigRat::zero();
        for s in 0..4u64 {
            for j in 0..2u32 {
                let x = model_point(Side::K, n, s).unwrap();
                let y = model_point(Side::L, n, j as u64).unwrap();
                direct += (x + y) * mu.weight(s, j).unwrap();
            }
        }
        assert_eq!(r.grid_form.lhs, direct.abs());
        assert_eq!(r.verdict(), DecayVerdict::ProvenHolds);
        assert!(r.grid_form.lhs < r.grid_form.rhs_certified_floor);
    }

    #[test]
    fn recentering_matches_grid_scan() {
        let mut rng = trial_rng(11, 0, 0);
        for _ in 0..500 {
            let flen = rng.gen_range(1..=12);
            let glen = rng.gen_range(1..=6);
            let f = random_axis(&mut rng, flen);
            let g = random_axis(&mut rng, glen);
            let mut scan = BigRat::zero();
            for x in &f.values {
                for y in &g.values {
                    scan = scan.max((x + y).abs());
                }
            }
            let (_, best) = best_shift(&f, &g).unwrap();
            assert_eq!(best, scan);
            // dense scan of shifts never beats the breakpoint minimum
            for k in -40..=40 {
                let c = rat(k, 20);
                let h = f.values.iter().map(|v| (v + &c).abs()).max().unwrap()
                    + g.values.iter().map(|v| (v - &c).abs()).max().unwrap();
                assert!(h >= best);
            }
        }
    }

    #[test]
    fn convergence_constant_is_zero() {
        let one = ProductFunction::Tensor(TestFunction::constant(rat(1, 1)), TestFunction::constant(rat(1, 1)));
        for row in convergence_table(&one, 1..=8, &pi50()).unwrap() {
            assert_eq!(row.value, rat(0, 1));
        }
    }

    #[test]
    fn convergence_rectangle_bounded_by_sup() {
        let rect = ProductFunction::Tensor(
            TestFunction::Indicator { threshold: rat(1, 4) },
            TestFunction::Indicator { threshold: rat(1, 1) },
        );
        for row in convergence_table(&rect, 1..=12, &pi50()).unwrap() {
            assert!(row.value.abs() <= sup_closed(row.n as u64));
            assert_eq!(row.verdict, Some(DecayVerdict::ProvenHolds));
        }
    }

    #[test]
    fn convergence_xy_decays() {
        let xy = ProductFunction::Tensor(TestFunction::identity(), TestFunction::identity());
        let rows = convergence_table(&xy, 1..=10, &pi50()).unwrap();
        for row in &rows {
            assert_eq!(row.verdict, Some(DecayVerdict::ProvenHolds));
            assert!(row.value.abs() <= *row.bound.as_ref().unwrap());
        }
        assert!(rows[9].bound.as_ref().unwrap() < rows[0].bound.as_ref().unwrap());
    }

    #[test]
    fn strongly_normal_examples() {
        let pi = pi50();
        let one = TestFunction::constant(rat(1, 1));
        let r = strongly_normal_partial(&[1, 4, 9, 16], &one, &one, &pi).unwrap();
        assert_eq!(r.partial_sum, rat(0, 1));
        let id = TestFunction::identity();
        let r = strongly_normal_partial(&[1, 4, 9, 16], &id, &id, &pi).unwrap();
        assert_eq!(r.verdict, DecayVerdict::ProvenHolds);
        assert!(r.partial_sum <= r.bound_floor);
        let mut rng = trial_rng(3, 0, 0);
        let f = random_block_function(&mut rng, Side::K, &[2, 3]);
        let g = random_block_function(&mut rng, Side::L, &[2, 3]);
        let r = strongly_normal_partial(&[2, 3], &f, &g, &pi).unwrap();
        assert_eq!(r.terms.len(), 2);
        assert_eq!(r.partial_sum, &r.terms[0] + &r.terms[1]);
        assert_eq!(r.verdict, DecayVerdict::ProvenHolds);
    }

    #[test]
    fn strongly_normal_rejects_bad_subsequences() {
        let pi = pi50();
        let id = TestFunction::identity();
        assert!(matches!(strongly_normal_partial(&[3, 2], &id, &id, &pi), Err(Error::Domain(_))));
        assert!(matches!(strongly_normal_partial(&[1, 99], &id, &id, &pi), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn staircase_identity_sizes() {
        let sizes = parse_sizes("id:50").unwrap();
        let st = Staircase::new(&sizes).unwrap();
        assert_eq!(st.thresholds(), &[2, 4, 8, 16, 32]);
        assert_eq!(st.stage(1).unwrap(), 0);
        assert_eq!(st.stage(5).unwrap(), 2);
        assert_eq!(st.stage(50).unwrap(), 5);
        assert!(st.stage(51).is_err());
        let g1 = generalized_from(&st, 1).unwrap();
        assert!(g1.block.is_none());
        assert_eq!(g1.norm(), rat(1, 1));
        let g5 = generalized_from(&st, 5).unwrap();
        let mu = g5.block.as_ref().unwrap();
        assert_eq!((mu.matrix().num_rows(), mu.n()), (4, 2));
    }

    #[test]
    fn staircase_forced_strictly_increasing() {
        // sizes jump straight to a large block: raw thresholds would tie
        let sizes = vec![(1, 1), (1, 1), (64, 6), (64, 6), (64, 6), (64, 6), (64, 6), (64, 6), (64, 6)];
        let st = Staircase::new(&sizes).unwrap();
        assert_eq!(st.thresholds(), &[3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn staircase_needs_stage_one() {
        assert!(matches!(Staircase::new(&[(1, 1), (1, 5)]), Err(Error::InsufficientData(_))));
        assert!(matches!(generalized_sequence(&[(1, 1), (4, 2)], 3), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn power_sizes_recover_mu_n() {
        let sizes = parse_sizes("pow2:6").unwrap();
        let st = Staircase::new(&sizes).unwrap();
        assert_eq!(st.thresholds(), &[1, 2, 3, 4, 5, 6]);
        for n in 1..=6u32 {
            let g = generalized_from(&st, n as u64).unwrap();
            assert_eq!(g.stage, n);
            let mu = build_mu(n).unwrap();
            let atoms = g.atoms();
            for (idx, (s, j, sign)) in mu.atoms().enumerate() {
                let (x, y, w) = &atoms[idx];
                assert_eq!(x, &model_point(Side::K, n, s).unwrap());
                assert_eq!(y, &model_point(Side::L, n, j as u64).unwrap());
                assert_eq!(w, &(mu.scale() * BigInt::from(sign)));
            }
        }
    }

    #[test]
    fn generalized_envelope() {
        let pi = pi50();
        let st = Staircase::new(&parse_sizes("id:20").unwrap()).unwrap();
        for n in 2..=20u64 {
            let g = generalized_from(&st, n).unwrap();
            let m = g.stage;
            let all_rows: Vec<u64> = (0..g.block_sizes.0).collect();
            let all_cols: Vec<u64> = (0..g.block_sizes.1).collect();
            let witness_rows: Vec<u64> = all_rows.iter().copied().filter(|&s| s < 1 << m && 2 * s.count_ones() > m).collect();
            let v = g.eval_block_rectangle(&witness_rows, &all_cols).unwrap();
            assert_eq!(v, sup_closed(m as u64));
            assert_eq!(g.envelope_check(&v, &pi), Some(Certainty::ProvenStrict));
            assert!(g.support_within_blocks());
        }
    }

    #[test]
    fn generalized_tables() {
        let pi = pi50();
        let rows = generalized_table(&parse_sizes("id:30").unwrap(), 5, 4, &pi).unwrap();
        assert_eq!(rows.len(), 30);
        assert!(rows.iter().all(|r| r.holds() == Certainty::ProvenStrict));
        assert_eq!(rows[0].envelope, None);
        let rows = generalized_table(&parse_sizes("pow2:8").unwrap(), 5, 4, &pi).unwrap();
        assert!(rows.iter().all(|r| r.matches_mu == Some(true)));
        assert_eq!(rows[3].max_value, rat(3, 16));
    }

    #[test]
    fn parse_sizes_forms() {
        assert_eq!(parse_sizes("2:1, 4:2").unwrap(), vec![(2, 1), (4, 2)]);
        assert_eq!(parse_sizes("pow2:3").unwrap(), vec![(2, 1), (4, 2), (8, 3)]);
        assert!(parse_sizes("2-1").is_err());
        assert!(parse_sizes("pow2:70").is_err());
    }
}
