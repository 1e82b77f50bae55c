//! Disjoint continuous bumps adapted to `mu_n`, and the operators `T`, `S`,
//! `P = TS` that exhibit a complemented copy of `c0` at finite scale.
//!
//! Every bump is a product of piecewise-linear hats centred at embedded atoms.
//! The hat around the model point at position `p` has radius
//! `1/(2(p+1)(p+2))`, half the gap to its right-hand neighbour, so hats around
//! distinct points never meet and each one stays away from `0`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{random_unit_rational, trial_rng};
use crate::error::{Error, Result};
use crate::exactmath::BigRat;
use crate::measures::{build_mu, JNMeasure};
use crate::spaces::{block_len, block_offset, integrate, isolation_radius, point_at, PointFunction, Side};

/// The atoms of `mu_n` with weight `+1/(n 2^n)`, as `(s, j)` grid indices.
pub fn positive_support(n: u32) -> Result<Vec<(u64, u32)>> {
    let mu = build_mu(n)?;
    Ok(mu.atoms().filter(|&(_, _, sign)| sign > 0).map(|(s, j, _)| (s, j)).collect())
}

/// `max(0, 1 - |x - 1/(p+1)| / r(p))`.
pub fn axis_hat(x: &BigRat, position: u64) -> BigRat {
    let dist = (x - point_at(position)).abs();
    let v = BigRat::one() - dist / isolation_radius(position);
    if v.is_positive() {
        v
    } else {
        BigRat::zero()
    }
}

/// Positions whose hat is nonzero at `x`, with the hat value. At most one
/// position qualifies since the hats are disjoint.
pub fn hat_at(x: &BigRat) -> Option<(u64, BigRat)> {
    if !x.is_positive() {
        return None;
    }
    if x.numer().is_one() {
        // a model point is the centre of its own hat
        return x.denom().to_u64().map(|m| (m - 1, BigRat::one()));
    }
    let m0 = (x.denom() / x.numer()).to_u64()?;
    [m0, m0 + 1]
        .into_iter()
        .filter(|&m| m >= 1)
        .map(|m| (m - 1, axis_hat(x, m - 1)))
        .find(|(_, v)| v.is_positive())
}

/// `gap(p) = (1/(p+1) - 1/(p+2)) - r(p) - r(p+1)`: the free space between the
/// hats at positions `p` and `p+1`.
pub fn hat_gap(position: u64) -> BigRat {
    point_at(position) - point_at(position + 1) - isolation_radius(position) - isolation_radius(position + 1)
}

/// Closed form of [`hat_gap`]: `1/((p+1)(p+2)(p+3))`.
pub fn hat_gap_closed(position: u64) -> BigRat {
    let p = BigInt::from(position);
    BigRat::new(BigInt::one(), (&p + 1u32) * (&p + 2u32) * (p + 3u32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BumpKind {
    /// `phi_n`: hats at the positive atoms, values in `[0, 1]`
    Positive,
    /// `psi_n`: hats at all atoms carrying the sign of the weight, values in `[-1, 1]`
    Signed,
}

/// `phi_n` (or `psi_n`) for `n = 1..=n_max`, each supported in a small
/// neighbourhood of the block-`n` atoms.
#[derive(Clone, Debug)]
pub struct BumpFamily {
    kind: BumpKind,
    measures: Vec<JNMeasure>,
    /// `t_n = 1/mu_n(phi_n)`
    t: Vec<BigRat>,
}

pub fn build_bumps(n_max: u32) -> Result<BumpFamily> {
    BumpFamily::new(BumpKind::Positive, n_max)
}

pub fn sign_bumps(n_max: u32) -> Result<BumpFamily> {
    BumpFamily::new(BumpKind::Signed, n_max)
}

impl BumpFamily {
    pub fn new(kind: BumpKind, n_max: u32) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Domain("bump family needs n_max >= 1".into()));
        }
        let measures = (1..=n_max).map(build_mu).collect::<Result<Vec<_>>>()?;
        let mut family = BumpFamily { kind, measures, t: Vec::new() };
        let diag = (1..=n_max)
            .into_par_iter()
            .map(|n| family.pairing(n, n))
            .collect::<Result<Vec<_>>>()?;
        if diag.iter().any(|d| d.is_zero()) {
            return Err(Error::Domain("mu_n(phi_n) vanished".into()));
        }
        family.t = diag.iter().map(|d| d.recip()).collect();
        Ok(family)
    }

    pub fn kind(&self) -> BumpKind {
        self.kind
    }

    pub fn n_max(&self) -> u32 {
        self.measures.len() as u32
    }

    pub fn measure(&self, n: u32) -> Result<&JNMeasure> {
        self.check_index(n)?;
        Ok(&self.measures[n as usize - 1])
    }

    pub fn t(&self, n: u32) -> Result<&BigRat> {
        self.check_index(n)?;
        Ok(&self.t[n as usize - 1])
    }

    fn check_index(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.n_max() {
            return Err(Error::Domain(format!("bump index {n} outside 1..={}", self.n_max())));
        }
        Ok(())
    }

    /// Centre atoms of bump `n` as grid indices with their sign.
    pub fn centers(&self, n: u32) -> Result<Vec<(u64, u32, i64)>> {
        let mu = self.measure(n)?;
        Ok(mu.atoms().filter(|&(_, _, sign)| self.kind == BumpKind::Signed || sign > 0).collect())
    }

    /// Bump `n` at an arbitrary point of the plane.
    pub fn eval(&self, n: u32, x: &BigRat, y: &BigRat) -> Result<BigRat> {
        let mu = self.measure(n)?;
        let (Some((kp, hx)), Some((lp, hy))) = (hat_at(x), hat_at(y)) else {
            return Ok(BigRat::zero());
        };
        let (koff, loff) = (block_offset(Side::K, n), block_offset(Side::L, n));
        if kp < koff || kp >= koff + block_len(Side::K, n) || lp < loff || lp >= loff + block_len(Side::L, n) {
            return Ok(BigRat::zero());
        }
        let sign = mu.matrix().entry(kp - koff, (lp - loff) as u32);
        let h = hx.min(hy);
        Ok(match (self.kind, sign > 0) {
            (BumpKind::Positive, false) => BigRat::zero(),
            (BumpKind::Positive, true) | (BumpKind::Signed, true) => h,
            (BumpKind::Signed, false) => -h,
        })
    }

    /// `mu_n(phi_m)`.
    pub fn pairing(&self, n: u32, m: u32) -> Result<BigRat> {
        integrate(self.measure(n)?, &Bump { family: self, m })
    }

    /// `[mu_n(phi_m)]` for `n, m <= n_max`, rows in order of `n`.
    pub fn orthogonality_matrix(&self) -> Result<Vec<Vec<BigRat>>> {
        let n_max = self.n_max();
        (1..=n_max)
            .into_par_iter()
            .map(|n| (1..=n_max).map(|m| self.pairing(n, m)).collect())
            .collect()
    }

    /// Extremes of bump `n` over its centres.
    pub fn range(&self, n: u32) -> Result<(BigRat, BigRat)> {
        let mut lo = BigRat::zero();
        let mut hi = BigRat::zero();
        for (s, j, _) in self.centers(n)? {
            let v = self.eval(n, &point_at(block_offset(Side::K, n) + s), &point_at(block_offset(Side::L, n) + j as u64))?;
            lo = lo.min(v.clone());
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    /// Closed-form disjointness: on each axis, every pair of neighbouring hat
    /// intervals among the positions used by blocks `1..=n_max` is separated
    /// by `hat_gap(p) = 1/((p+1)(p+2)(p+3)) > 0`, and the last hat stays
    /// right of `0`. Sorted disjoint neighbours make all pairs disjoint.
    pub fn certify_disjointness(&self) -> Result<DisjointnessReport> {
        let n_max = self.n_max();
        let mut holds = true;
        let mut min_gap: Option<BigRat> = None;
        for side in [Side::K, Side::L] {
            let first = block_offset(side, 1);
            let last = block_offset(side, n_max) + block_len(side, n_max) - 1;
            let side_ok = (first..last).into_par_iter().all(|p| {
                let gap = hat_gap(p);
                gap.is_positive() && gap == hat_gap_closed(p)
            });
            holds &= side_ok && point_at(last) > isolation_radius(last);
            // hat_gap is decreasing in p
            let g = hat_gap_closed(last.saturating_sub(1).max(first));
            min_gap = Some(match min_gap {
                Some(m) => m.min(g),
                None => g,
            });
        }
        Ok(DisjointnessReport { holds, min_gap: min_gap.expect("two sides") })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjointnessReport {
    pub holds: bool,
    pub min_gap: BigRat,
}

/// One bump of a family, as a function on the plane.
pub struct Bump<'a> {
    pub family: &'a BumpFamily,
    pub m: u32,
}

impl PointFunction for Bump<'_> {
    fn eval_at(&self, x: &BigRat, y: &BigRat) -> Result<BigRat> {
        self.family.eval(self.m, x, y)
    }
}

/// A finitely supported sequence, the finite-scale stand-in for `c0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct C0Vector {
    entries: BTreeMap<u32, BigRat>,
}

impl C0Vector {
    pub fn new(entries: impl IntoIterator<Item = (u32, BigRat)>) -> Self {
        let mut v = C0Vector::default();
        for (n, x) in entries {
            v.set(n, x);
        }
        v
    }

    pub fn unit(n: u32) -> Self {
        C0Vector::new([(n, BigRat::one())])
    }

    pub fn set(&mut self, n: u32, x: BigRat) {
        if x.is_zero() {
            self.entries.remove(&n);
        } else {
            self.entries.insert(n, x);
        }
    }

    pub fn get(&self, n: u32) -> BigRat {
        self.entries.get(&n).cloned().unwrap_or_else(BigRat::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &BigRat)> {
        self.entries.iter().map(|(&n, x)| (n, x))
    }

    pub fn restrict(&self, n_max: u32) -> Self {
        C0Vector { entries: self.entries.range(..=n_max).map(|(&n, x)| (n, x.clone())).collect() }
    }

    pub fn random(rng: &mut impl Rng, n_max: u32, max_support: usize) -> Self {
        let len = rng.gen_range(0..=max_support);
        C0Vector::new((0..len).map(|_| (rng.gen_range(1..=n_max), random_unit_rational(rng))))
    }
}

/// `sum_n c_n phi_n` for finitely many `n`.
pub struct BumpCombination<'a> {
    pub family: &'a BumpFamily,
    pub coeffs: C0Vector,
}

impl PointFunction for BumpCombination<'_> {
    fn eval_at(&self, x: &BigRat, y: &BigRat) -> Result<BigRat> {
        self.coeffs
            .entries()
            .map(|(n, c)| Ok(c * self.family.eval(n, x, y)?))
            .try_fold(BigRat::zero(), |acc, v: Result<BigRat>| Ok(acc + v?))
    }
}

/// `T x = sum_n t_n x_n phi_n`.
pub fn op_t<'a>(family: &'a BumpFamily, x: &C0Vector) -> Result<BumpCombination<'a>> {
    let coeffs = x.entries().map(|(n, xn)| Ok((n, family.t(n)? * xn))).collect::<Result<Vec<_>>>()?;
    Ok(BumpCombination { family, coeffs: C0Vector::new(coeffs) })
}

/// `T x` at each query point.
pub fn op_t_at(family: &BumpFamily, x: &C0Vector, queries: &[(BigRat, BigRat)]) -> Result<Vec<BigRat>> {
    let tx = op_t(family, x)?;
    queries.iter().map(|(qx, qy)| tx.eval_at(qx, qy)).collect()
}

/// `S f = (mu_n(f))_{n <= n_max}`.
pub fn op_s(family: &BumpFamily, f: &(dyn PointFunction + Sync), n_max: u32) -> Result<C0Vector> {
    let values = (1..=n_max)
        .into_par_iter()
        .map(|n| Ok((n, integrate(family.measure(n)?, f)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(C0Vector::new(values))
}

/// Random values on every grid cell of blocks `1..=n_max`; evaluating
/// anywhere else is a domain error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomTable {
    values: HashMap<(u64, u64), BigRat>,
}

impl AtomTable {
    pub fn random(rng: &mut impl Rng, n_max: u32) -> Self {
        let mut values = HashMap::new();
        for n in 1..=n_max {
            for s in 0..block_len(Side::K, n) {
                for j in 0..block_len(Side::L, n) {
                    let key = (block_offset(Side::K, n) + s, block_offset(Side::L, n) + j);
                    values.insert(key, random_unit_rational(rng));
                }
            }
        }
        AtomTable { values }
    }
}

impl PointFunction for AtomTable {
    fn eval_at(&self, x: &BigRat, y: &BigRat) -> Result<BigRat> {
        let pos = |v: &BigRat| v.numer().is_one().then(|| v.denom().to_u64()).flatten().map(|m| m - 1);
        pos(x)
            .zip(pos(y))
            .and_then(|key| self.values.get(&key).cloned())
            .ok_or_else(|| Error::Domain(format!("no tabulated value at ({x}, {y})")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionReport {
    /// `S(T x) = x` on `1..=n_max`
    pub st_identity: bool,
    /// `P(P f) = P f` at every atom of blocks `1..=n_max`
    pub idempotent: bool,
    /// `S(P f) = S f`
    pub s_fixed: bool,
}

impl ProjectionReport {
    pub fn holds(&self) -> bool {
        self.st_identity && self.idempotent && self.s_fixed
    }
}

pub fn check_st(family: &BumpFamily, x: &C0Vector, n_max: u32) -> Result<bool> {
    let tx = op_t(family, x)?;
    Ok(op_s(family, &tx, n_max)? == x.restrict(n_max))
}

/// `S T x = x`, and `P^2 f = P f` compared at every atom of blocks `1..=n_max`.
pub fn check_projection(
    family: &BumpFamily,
    x: &C0Vector,
    f: &(dyn PointFunction + Sync),
    n_max: u32,
) -> Result<ProjectionReport> {
    let st_identity = check_st(family, x, n_max)?;
    let sf = op_s(family, f, n_max)?;
    let pf = op_t(family, &sf)?;
    let spf = op_s(family, &pf, n_max)?;
    let ppf = op_t(family, &spf)?;
    let mut idempotent = true;
    for n in 1..=n_max {
        let diffs = family.measure(n)?.atoms().filter(|&(s, j, _)| {
            let x = point_at(block_offset(Side::K, n) + s);
            let y = point_at(block_offset(Side::L, n) + j as u64);
            !matches!((pf.eval_at(&x, &y), ppf.eval_at(&x, &y)), (Ok(a), Ok(b)) if a == b)
        });
        idempotent &= diffs.count() == 0;
    }
    Ok(ProjectionReport { st_identity, idempotent, s_fixed: spf == sf })
}

/// Seeded ST checks on random vectors supported in `1..=n_max`.
pub fn random_st_trials(family: &BumpFamily, trials: u32, seed: u64, n_max: u32) -> Result<u32> {
    let passed = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, n_max, trial);
            let x = C0Vector::random(&mut rng, n_max, 6);
            check_st(family, &x, n_max)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(passed.into_iter().filter(|&ok| ok).count() as u32)
}

/// Seeded idempotence checks on random tabulated functions over `1..=n_max`.
pub fn random_projection_trials(family: &BumpFamily, trials: u32, seed: u64, n_max: u32) -> Result<u32> {
    let passed = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed ^ 0x5eed, n_max, trial);
            let f = AtomTable::random(&mut rng, n_max);
            let x = C0Vector::random(&mut rng, n_max, 6);
            check_projection(family, &x, &f, n_max).map(|r| r.holds())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(passed.into_iter().filter(|&ok| ok).count() as u32)
}

/// Exact `1/2` check used for the orthogonality matrix.
pub fn is_half_identity(matrix: &[Vec<BigRat>]) -> bool {
    let half = BigRat::new(BigInt::one(), BigInt::from(2));
    matrix.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, v)| if i == j { *v == half } else { v.is_zero() })
    })
}
