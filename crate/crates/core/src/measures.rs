//! The sign matrix `phi_n` and the measure
//! `mu_n = (1/(n 2^n)) sum phi_n(s)(j) delta_(s,j)` on the `2^n x n` grid.
//!
//! Rows (`s`) index the first factor's support block, columns (`j`) the
//! second's. Atoms are never materialized: a row is a bit pattern, bit `j`
//! set meaning `phi_n(s)(j) = +1`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{exact_sum, exact_sum_parts, fmt_rat, parse_rat, pow2, BigRat};

pub const DEFAULT_N_MAX: u32 = 20;
/// Patterns are stored in a `u64`; this is the ceiling for any override.
pub const ABSOLUTE_N_MAX: u32 = 40;
pub const N_MAX_ENV: &str = "JN_LAB_NMAX";

/// Hard cap on `n` for anything that builds a measure: `JN_LAB_NMAX` if set
/// and parseable, otherwise [`DEFAULT_N_MAX`].
pub fn configured_n_max() -> u32 {
    std::env::var(N_MAX_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .map(|v| v.clamp(1, ABSOLUTE_N_MAX))
        .unwrap_or(DEFAULT_N_MAX)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Layout {
    /// row `s` has pattern `s`
    Canonical,
    Explicit { patterns: Vec<u64>, inverse: HashMap<u64, u64> },
}

/// A table of `2^n` rows by `n` columns with entries in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    n: u32,
    layout: Layout,
}

impl SignMatrix {
    /// The canonical bijection: `entry(s, j) = +1` iff bit `j` of `s` is set.
    pub fn canonical(n: u32) -> Result<Self> {
        Self::canonical_with_limit(n, configured_n_max())
    }

    pub fn canonical_with_limit(n: u32, n_max: u32) -> Result<Self> {
        check_n(n, n_max.min(ABSOLUTE_N_MAX))?;
        Ok(SignMatrix { n, layout: Layout::Canonical })
    }

    /// Any bijection from rows onto `{-1,1}^n`, given as one pattern per row.
    /// Only meant for exercising bijection-independence in tests.
    pub fn from_patterns(n: u32, patterns: Vec<u64>) -> Result<Self> {
        let m = Self::from_patterns_unchecked(n, patterns)?;
        m.validate()?;
        Ok(m)
    }

    /// Like [`SignMatrix::from_patterns`] without the bijection check. Used to
    /// inject faults into the verification pipeline.
    #[doc(hidden)]
    pub fn from_patterns_unchecked(n: u32, patterns: Vec<u64>) -> Result<Self> {
        check_n(n, ABSOLUTE_N_MAX)?;
        if patterns.len() as u64 != 1u64 << n {
            return Err(Error::Domain(format!(
                "sign matrix for n = {n} needs {} rows, got {}",
                1u64 << n,
                patterns.len()
            )));
        }
        let inverse = patterns.iter().enumerate().map(|(s, &p)| (p, s as u64)).collect();
        Ok(SignMatrix { n, layout: Layout::Explicit { patterns, inverse } })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn num_rows(&self) -> u64 {
        1u64 << self.n
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    pub fn is_canonical(&self) -> bool {
        self.layout == Layout::Canonical
    }

    #[inline]
    pub fn pattern(&self, s: u64) -> u64 {
        match &self.layout {
            Layout::Canonical => s,
            Layout::Explicit { patterns, .. } => patterns[s as usize],
        }
    }

    /// Row carrying the given pattern, if any.
    pub fn row_of_pattern(&self, pattern: u64) -> Option<u64> {
        match &self.layout {
            Layout::Canonical => (pattern <= self.full_mask()).then_some(pattern),
            Layout::Explicit { inverse, .. } => inverse.get(&pattern).copied(),
        }
    }

    #[inline]
    pub fn entry(&self, s: u64, j: u32) -> i64 {
        if self.pattern(s) >> j & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// `sum_{j in B} phi(s)(j)` for the column set encoded by `col_mask`.
    #[inline]
    pub fn row_sum(&self, s: u64, col_mask: u64) -> i64 {
        let plus = (self.pattern(s) & col_mask).count_ones() as i64;
        2 * plus - col_mask.count_ones() as i64
    }

    pub fn column_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.n as usize];
        for s in 0..self.num_rows() {
            let p = self.pattern(s);
            for (j, sum) in sums.iter_mut().enumerate() {
                *sum += if p >> j & 1 == 1 { 1 } else { -1 };
            }
        }
        sums
    }

    /// Rows pairwise distinct, patterns within `n` bits, every column sums to 0.
    pub fn validate(&self) -> Result<()> {
        if let Layout::Explicit { patterns, inverse } = &self.layout {
            if let Some(p) = patterns.iter().find(|&&p| p > self.full_mask()) {
                return Err(Error::Domain(format!("pattern {p:#b} has more than {} bits", self.n)));
            }
            if inverse.len() != patterns.len() {
                return Err(Error::Domain("sign matrix rows are not pairwise distinct".into()));
            }
        }
        if let Some(j) = self.column_sums().iter().position(|&c| c != 0) {
            return Err(Error::Domain(format!("column {j} of the sign matrix does not sum to 0")));
        }
        Ok(())
    }

    /// Full table, row-major; only sensible for small `n`.
    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.num_rows()).map(|s| (0..self.n).map(|j| self.entry(s, j)).collect()).collect()
    }
}

fn check_n(n: u32, n_max: u32) -> Result<()> {
    if n == 0 || n > n_max {
        return Err(Error::SizeLimit { what: "sign matrix size", n: n as u64, max: n_max as u64 });
    }
    Ok(())
}

pub fn build_sign_matrix(n: u32) -> Result<SignMatrix> {
    SignMatrix::canonical(n)
}

/// The signed measure `mu_n`; weights are `scale * phi_n(s)(j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JNMeasure {
    matrix: SignMatrix,
    scale: BigRat,
}

pub fn build_mu(n: u32) -> Result<JNMeasure> {
    let mu = JNMeasure::from_matrix(build_sign_matrix(n)?);
    debug_assert!(mu.total_variation().is_one() && mu.total_mass().is_zero());
    Ok(mu)
}

impl JNMeasure {
    pub fn from_matrix(matrix: SignMatrix) -> Self {
        let n = matrix.n();
        let scale = BigRat::new(BigInt::one(), BigInt::from(n) * pow2(n as u64));
        JNMeasure { matrix, scale }
    }

    pub fn n(&self) -> u32 {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SignMatrix {
        &self.matrix
    }

    /// `1 / (n 2^n)`
    pub fn scale(&self) -> &BigRat {
        &self.scale
    }

    pub fn weight(&self, s: u64, j: u32) -> Result<BigRat> {
        self.check_cell(s, j)?;
        Ok(&self.scale * BigInt::from(self.matrix.entry(s, j)))
    }

    fn check_cell(&self, s: u64, j: u32) -> Result<()> {
        if s >= self.matrix.num_rows() || j >= self.n() {
            return Err(Error::Domain(format!("atom ({s}, {j}) is outside the {}x{} grid", self.matrix.num_rows(), self.n())));
        }
        Ok(())
    }

    pub fn support_size(&self) -> u64 {
        self.matrix.num_rows() * self.n() as u64
    }

    /// `sum |weight|` over all atoms.
    pub fn total_variation(&self) -> BigRat {
        // every entry is +-1, so |entry| = 1; counted rather than assumed
        let mut count: u64 = 0;
        for s in 0..self.matrix.num_rows() {
            let p = self.matrix.pattern(s);
            count += (p & self.matrix.full_mask()).count_ones() as u64;
            count += (!p & self.matrix.full_mask()).count_ones() as u64;
        }
        &self.scale * BigInt::from(count)
    }

    /// Sum of all weights.
    pub fn total_mass(&self) -> BigRat {
        let full = self.matrix.full_mask();
        let total: i64 = (0..self.matrix.num_rows()).map(|s| self.matrix.row_sum(s, full)).sum();
        &self.scale * BigInt::from(total)
    }

    /// Measure of the set of positive atoms.
    pub fn positive_mass(&self) -> BigRat {
        let full = self.matrix.full_mask();
        let plus: u64 = (0..self.matrix.num_rows()).map(|s| (self.matrix.pattern(s) & full).count_ones() as u64).sum();
        &self.scale * BigInt::from(plus)
    }

    /// Atoms as `(row, column, sign)`, row-major.
    pub fn atoms(&self) -> impl Iterator<Item = (u64, u32, i64)> + '_ {
        (0..self.matrix.num_rows()).flat_map(move |s| (0..self.n()).map(move |j| (s, j, self.matrix.entry(s, j))))
    }
}

/// A rectangle `A x B` of grid indices. Both sets are kept sorted and
/// duplicate-free; either may be empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRectangle {
    pub rows: Vec<u64>,
    pub cols: Vec<u32>,
}

impl IndexRectangle {
    pub fn new(mut rows: Vec<u64>, mut cols: Vec<u32>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        IndexRectangle { rows, cols }
    }

    pub fn from_col_mask(rows: Vec<u64>, col_mask: u64) -> Self {
        let cols = (0..64).filter(|j| col_mask >> j & 1 == 1).collect();
        Self::new(rows, cols)
    }

    pub fn col_mask(&self) -> u64 {
        self.cols.iter().fold(0u64, |m, &j| m | 1u64 << j)
    }

    pub fn check_bounds(&self, n: u32) -> Result<()> {
        let rows = 1u64 << n;
        if let Some(s) = self.rows.iter().find(|&&s| s >= rows) {
            return Err(Error::Domain(format!("row index {s} out of range for n = {n}")));
        }
        if let Some(j) = self.cols.iter().find(|&&j| j >= n) {
            return Err(Error::Domain(format!("column index {j} out of range for n = {n}")));
        }
        Ok(())
    }
}

/// Exact `mu_n(A x B)`.
pub fn eval_rectangle(mu: &JNMeasure, rect: &IndexRectangle) -> Result<BigRat> {
    rect.check_bounds(mu.n())?;
    Ok(mu.scale() * BigInt::from(rectangle_sum(mu.matrix(), &rect.rows, rect.col_mask())))
}

/// Unscaled `sum_{s in A, j in B} phi(s)(j)`.
pub fn rectangle_sum(matrix: &SignMatrix, rows: &[u64], col_mask: u64) -> i64 {
    rows.iter().map(|&s| matrix.row_sum(s, col_mask)).sum()
}

/// Rows whose patterns are the negations of those in `rows`; flips the sign of
/// every rectangle value.
pub fn negated_rows(matrix: &SignMatrix, rows: &[u64]) -> Vec<u64> {
    let full = matrix.full_mask();
    rows.iter()
        .map(|&s| matrix.row_of_pattern(!matrix.pattern(s) & full).expect("bijection covers every pattern"))
        .collect()
}

/// Values on one axis of the grid (a block of rows or of columns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisFunction {
    pub values: Vec<BigRat>,
}

impl AxisFunction {
    pub fn new(values: Vec<BigRat>) -> Self {
        AxisFunction { values }
    }

    pub fn constant(len: usize, c: BigRat) -> Self {
        AxisFunction { values: vec![c; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> BigRat {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(BigRat::zero)
    }

    pub fn max(&self) -> Option<&BigRat> {
        self.values.iter().max()
    }

    pub fn min(&self) -> Option<&BigRat> {
        self.values.iter().min()
    }
}

/// A function on the whole `2^n x n` grid, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridFunction {
    n: u32,
    values: Vec<BigRat>,
}

impl GridFunction {
    pub fn from_fn(n: u32, mut f: impl FnMut(u64, u32) -> BigRat) -> Self {
        let rows = 1u64 << n;
        let values = (0..rows).flat_map(|s| (0..n).map(move |j| (s, j))).map(|(s, j)| f(s, j)).collect();
        GridFunction { n, values }
    }

    /// Errors if any grid cell is missing from `map`.
    pub fn from_map(n: u32, map: &HashMap<(u64, u32), BigRat>) -> Result<Self> {
        let rows = 1u64 << n;
        let mut values = Vec::with_capacity((rows * n as u64) as usize);
        for s in 0..rows {
            for j in 0..n {
                let v = map
                    .get(&(s, j))
                    .ok_or_else(|| Error::Domain(format!("grid function has no value at ({s}, {j})")))?;
                values.push(v.clone());
            }
        }
        Ok(GridFunction { n, values })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, s: u64, j: u32) -> &BigRat {
        &self.values[(s * self.n as u64 + j as u64) as usize]
    }
}

/// Exact `sum h(s, j) weight(s, j)`.
pub fn eval_function(mu: &JNMeasure, h: &GridFunction) -> Result<BigRat> {
    if h.n() != mu.n() {
        return Err(Error::Domain(format!("grid function is for n = {}, measure for n = {}", h.n(), mu.n())));
    }
    let n = mu.n() as usize;
    let terms = h.values.iter().enumerate().map(|(idx, v)| {
        if mu.matrix().entry((idx / n) as u64, (idx % n) as u32) > 0 {
            v.clone()
        } else {
            -v
        }
    });
    Ok(exact_sum(terms) * mu.scale())
}

/// Exact `mu_n(f (x) g)` for `f` on the rows and `g` on the columns.
pub fn eval_tensor(mu: &JNMeasure, f: &AxisFunction, g: &AxisFunction) -> Result<BigRat> {
    check_axes(mu, f, g)?;
    let (gs, dg) = common_denominator(&g.values);
    let matrix = mu.matrix();
    let terms = f.values.iter().enumerate().filter(|(_, fv)| !fv.is_zero()).map(|(s, fv)| {
        let p = matrix.pattern(s as u64);
        let mut inner = BigInt::zero();
        for (j, gv) in gs.iter().enumerate() {
            if p >> j & 1 == 1 {
                inner += gv;
            } else {
                inner -= gv;
            }
        }
        (fv.numer() * inner, fv.denom().clone())
    });
    Ok(exact_sum_parts(terms) / dg * mu.scale())
}

/// Exact `mu_n(f (+) g)`.
pub fn eval_sum(mu: &JNMeasure, f: &AxisFunction, g: &AxisFunction) -> Result<BigRat> {
    check_axes(mu, f, g)?;
    let full = mu.matrix().full_mask();
    let (gs, dg) = common_denominator(&g.values);
    // mu(f (x) 1) + mu(1 (x) g)
    let row_part = exact_sum_parts(
        f.values
            .iter()
            .enumerate()
            .map(|(s, fv)| (fv.numer() * BigInt::from(mu.matrix().row_sum(s as u64, full)), fv.denom().clone())),
    );
    let col_sums = mu.matrix().column_sums();
    let mut col_part = BigInt::zero();
    for (gv, c) in gs.iter().zip(col_sums) {
        col_part += gv * BigInt::from(c);
    }
    Ok((row_part + BigRat::new(col_part, dg)) * mu.scale())
}

fn check_axes(mu: &JNMeasure, f: &AxisFunction, g: &AxisFunction) -> Result<()> {
    if f.len() as u64 != mu.matrix().num_rows() {
        return Err(Error::Domain(format!("row function has {} values, need {}", f.len(), mu.matrix().num_rows())));
    }
    if g.len() != mu.n() as usize {
        return Err(Error::Domain(format!("column function has {} values, need {}", g.len(), mu.n())));
    }
    Ok(())
}

/// Numerators over the least common denominator.
pub fn common_denominator(values: &[BigRat]) -> (Vec<BigInt>, BigInt) {
    let den = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let nums = values.iter().map(|v| v.numer() * (&den / v.denom())).collect();
    (nums, den)
}

/// JSON form of a measure together with an optional rectangle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub n: u32,
    /// `"p/q"`
    pub scale: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rows: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cols: Option<Vec<u32>>,
}

impl MeasureDoc {
    pub fn new(mu: &JNMeasure, rect: Option<&IndexRectangle>) -> Self {
        MeasureDoc {
            n: mu.n(),
            scale: fmt_rat(mu.scale()),
            rows: rect.map(|r| r.rows.clone()),
            cols: rect.map(|r| r.cols.clone()),
        }
    }

    /// Rebuilds the canonical measure and rectangle, checking the recorded scale.
    pub fn restore(&self) -> Result<(JNMeasure, Option<IndexRectangle>)> {
        let mu = build_mu(self.n)?;
        if &parse_rat(&self.scale)? != mu.scale() {
            return Err(Error::Parse(format!("scale {} does not match n = {}", self.scale, self.n)));
        }
        let rect = match (&self.rows, &self.cols) {
            (Some(r), Some(c)) => {
                let rect = IndexRectangle::new(r.clone(), c.clone());
                rect.check_bounds(self.n)?;
                Some(rect)
            }
            (None, None) => None,
            _ => return Err(Error::Parse("rectangle needs both rows and cols".into())),
        };
        Ok((mu, rect))
    }
}
