//! A concrete compact model for both factors: `{0} u {1/m : m >= 1}`.
//!
//! Support blocks are consecutive runs of points. Block `n` of the `K` side
//! holds `2^n` points starting after offset `2^n - 2`; block `n` of the `L`
//! side holds `n` points after offset `n(n-1)/2`. The point with global
//! position `p` (0-based) is `1/(p+1)`, so blocks are disjoint and the only
//! cluster point, `0`, lies in none of them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{exact_sum, fmt_rat, parse_rat, BigRat};
use crate::measures::{AxisFunction, JNMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    K,
    L,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::K => "K",
            Side::L => "L",
        })
    }
}

pub fn block_offset(side: Side, n: u32) -> u64 {
    match side {
        Side::K => (1u64 << n) - 2,
        Side::L => n as u64 * (n as u64 - 1) / 2,
    }
}

pub fn block_len(side: Side, n: u32) -> u64 {
    match side {
        Side::K => 1u64 << n,
        Side::L => n as u64,
    }
}

/// `1/(offset(n) + idx + 1)`.
pub fn model_point(side: Side, n: u32, idx: u64) -> Result<BigRat> {
    if n == 0 || n > 62 {
        return Err(Error::Domain(format!("no {side} block for n = {n}")));
    }
    if idx >= block_len(side, n) {
        return Err(Error::Domain(format!("index {idx} is outside {side} block {n} of length {}", block_len(side, n))));
    }
    Ok(point_at(block_offset(side, n) + idx))
}

/// The point at global 0-based position `p`.
pub fn point_at(p: u64) -> BigRat {
    BigRat::new(BigInt::one(), BigInt::from(p + 1))
}

/// Global position of a model point, if `x = 1/m` for a positive integer `m`.
pub fn position_of(x: &BigRat) -> Option<u64> {
    if x.numer().is_one() && x.denom().is_positive() {
        x.denom().to_u64().map(|m| m - 1)
    } else {
        None
    }
}

/// `(n, idx)` of the block containing global position `p`.
pub fn block_of(side: Side, p: u64) -> (u32, u64) {
    let mut n = 1;
    while block_offset(side, n + 1) <= p {
        n += 1;
    }
    (n, p - block_offset(side, n))
}

/// All points of one block, in index order.
pub fn block_points(side: Side, n: u32) -> Vec<BigRat> {
    let offset = block_offset(side, n);
    (0..block_len(side, n)).map(|i| point_at(offset + i)).collect()
}

/// Half the distance from `1/m` to its nearest neighbour `1/(m+1)`:
/// `1/(2 m (m+1))`. Also far below half the distance to `0`.
pub fn isolation_radius(position: u64) -> BigRat {
    let m = BigInt::from(position + 1);
    BigRat::new(BigInt::one(), BigInt::from(2) * &m * (m + 1))
}

/// Finite table of values with a fallback equal to the value at the limit
/// point. Continuous on the model because only finitely many points differ
/// from the limit value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    entries: HashMap<BigRat, BigRat>,
    limit: BigRat,
    /// Declared `L` with `|f(x) - f(0)| <= L x` at every tabulated point.
    modulus: Option<BigRat>,
}

impl Table {
    pub fn new(entries: impl IntoIterator<Item = (BigRat, BigRat)>, limit: BigRat, modulus: Option<BigRat>) -> Self {
        Table { entries: entries.into_iter().collect(), limit, modulus }
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Header row, then `point,value` pairs as `p/q`. A row for point `0`
    /// is required; it fixes the limit value.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut entries = BTreeMap::new();
        let mut limit = None;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::Parse(format!("expected 2 columns, got {}", record.len())));
            }
            let x = parse_rat(&record[0])?;
            let v = parse_rat(&record[1])?;
            if x.is_zero() {
                limit = Some(v);
            } else if position_of(&x).is_none() {
                return Err(Error::Domain(format!("{} is not a model point", fmt_rat(&x))));
            } else {
                entries.insert(x, v);
            }
        }
        let limit = limit.ok_or_else(|| Error::Parse("table has no row for the limit point 0".into()))?;
        Ok(Table::new(entries, limit, None))
    }

    pub fn limit(&self) -> &BigRat {
        &self.limit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn eval(&self, x: &BigRat) -> BigRat {
        self.entries.get(x).unwrap_or(&self.limit).clone()
    }

    /// Checks the declared modulus at every tabulated point.
    pub fn check_continuity(&self) -> Result<()> {
        let Some(modulus) = &self.modulus else { return Ok(()) };
        let mut points: Vec<&BigRat> = self.entries.keys().collect();
        points.sort();
        for x in points {
            let v = &self.entries[x];
            if (v - &self.limit).abs() > modulus * x {
                return Err(Error::Domain(format!(
                    "table value at {} breaks the declared modulus {}",
                    fmt_rat(x),
                    fmt_rat(modulus)
                )));
            }
        }
        Ok(())
    }
}

/// Continuous, rational-valued test functions on one factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// `x^p`
    Power(u32),
    /// `a x + b`
    Affine { a: BigRat, b: BigRat },
    /// `1` on `{x < t}`, `0` elsewhere; clopen for `t > 0` since every point
    /// above `t` is isolated.
    Indicator { threshold: BigRat },
    Tabulated(Table),
}

impl TestFunction {
    pub fn constant(c: BigRat) -> Self {
        TestFunction::Affine { a: BigRat::zero(), b: c }
    }

    pub fn identity() -> Self {
        TestFunction::Power(1)
    }

    pub fn eval(&self, x: &BigRat) -> BigRat {
        match self {
            TestFunction::Power(p) => num_traits::pow(x.clone(), *p as usize),
            TestFunction::Affine { a, b } => a * x + b,
            TestFunction::Indicator { threshold } => {
                if x < threshold {
                    BigRat::one()
                } else {
                    BigRat::zero()
                }
            }
            TestFunction::Tabulated(t) => t.eval(x),
        }
    }

    /// Value at the limit point `0`.
    pub fn limit_value(&self) -> BigRat {
        self.eval(&BigRat::zero())
    }

    /// Parses `pow:p`, `affine:a,b`, `indicator:t` or `table:@file.csv`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("function spec {spec:?} has no ':'")))?;
        match kind.trim() {
            "pow" => {
                let p = arg.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in {spec:?}")))?;
                Ok(TestFunction::Power(p))
            }
            "affine" => {
                let (a, b) = arg.split_once(',').ok_or_else(|| Error::Parse(format!("affine needs a,b in {spec:?}")))?;
                Ok(TestFunction::Affine { a: parse_rat(a)?, b: parse_rat(b)? })
            }
            "indicator" => Ok(TestFunction::Indicator { threshold: parse_rat(arg)? }),
            "table" => {
                let path = arg
                    .trim()
                    .strip_prefix('@')
                    .ok_or_else(|| Error::Parse(format!("table spec needs @path in {spec:?}")))?;
                Ok(TestFunction::Tabulated(Table::from_csv_path(Path::new(path))?))
            }
            other => Err(Error::Parse(format!("unknown function kind {other:?}"))),
        }
    }

    pub fn check_continuity(&self) -> Result<()> {
        match self {
            TestFunction::Tabulated(t) => t.check_continuity(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Power(p) => write!(f, "pow:{p}"),
            TestFunction::Affine { a, b } => write!(f, "affine:{},{}", fmt_rat(a), fmt_rat(b)),
            TestFunction::Indicator { threshold } => write!(f, "indicator:{}", fmt_rat(threshold)),
            TestFunction::Tabulated(t) => write!(f, "table[{} points]", t.len()),
        }
    }
}

/// Exact values on block `n` of `side`, and their maximum absolute value.
pub fn sample(f: &TestFunction, side: Side, n: u32) -> (AxisFunction, BigRat) {
    let values = AxisFunction::new(block_points(side, n).iter().map(|x| f.eval(x)).collect());
    let sup = values.sup_norm();
    (values, sup)
}

/// A function on the product `K x L`, evaluable at finitely many points.
pub trait PointFunction {
    fn eval_at(&self, x: &BigRat, y: &BigRat) -> Result<BigRat>;
}

/// Functions on the product built from one test function per factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProductFunction {
    /// `f(x) g(y)`
    Tensor(TestFunction, TestFunction),
    /// `f(x) + g(y)`
    Sum(TestFunction, TestFunction),
}

impl ProductFunction {
    /// The clopen rectangle `{x < s} x {y < t}` when this is a product of indicators.
    pub fn as_rectangle(&self) -> Option<(&BigRat, &BigRat)> {
        match self {
            ProductFunction::Tensor(
                TestFunction::Indicator { threshold: s },
                TestFunction::Indicator { threshold: t },
            ) => Some((s, t)),
            _ => None,
        }
    }
}

impl PointFunction for ProductFunction {
    fn eval_at(&self, x: &BigRat, y: &BigRat) -> Result<BigRat> {
        Ok(match self {
            ProductFunction::Tensor(f, g) => f.eval(x) * g.eval(y),
            ProductFunction::Sum(f, g) => f.eval(x) + g.eval(y),
        })
    }
}

impl fmt::Display for ProductFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductFunction::Tensor(a, b) => write!(f, "({a}) x ({b})"),
            ProductFunction::Sum(a, b) => write!(f, "({a}) + ({b})"),
        }
    }
}

/// `mu_n(F)`: the measure evaluated at its embedded atoms.
pub fn integrate(mu: &JNMeasure, f: &dyn PointFunction) -> Result<BigRat> {
    let n = mu.n();
    let kpts = block_points(Side::K, n);
    let lpts = block_points(Side::L, n);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (s, x) in kpts.iter().enumerate() {
        for (j, y) in lpts.iter().enumerate() {
            let v = f.eval_at(x, y)?;
            if mu.matrix().entry(s as u64, j as u32) > 0 {
                plus.push(v);
            } else {
                minus.push(v);
            }
        }
    }
    Ok((exact_sum(plus) - exact_sum(minus)) * mu.scale())
}

/// Index of `x` within block `n` of `side`, if it lies there.
pub fn in_block(side: Side, n: u32, x: &BigRat) -> Option<u64> {
    let p = position_of(x)?;
    let offset = block_offset(side, n);
    (p >= offset && p < offset + block_len(side, n)).then(|| p - offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rat;
    use crate::measures::{build_mu, eval_rectangle, eval_tensor, IndexRectangle};

    #[test]
    fn point_examples() {
        assert_eq!(model_point(Side::K, 1, 0).unwrap(), rat(1, 1));
        assert_eq!(model_point(Side::K, 2, 3).unwrap(), rat(1, 6));
        assert_eq!(model_point(Side::L, 3, 0).unwrap(), rat(1, 4));
        assert!(model_point(Side::K, 2, 4).is_err());
        assert!(model_point(Side::L, 3, 3).is_err());
    }

    #[test]
    fn blocks_are_disjoint_and_decreasing() {
        for side in [Side::K, Side::L] {
            let mut prev: Option<BigRat> = None;
            let mut seen = std::collections::HashSet::new();
            for n in 1..=20 {
                for idx in 0..block_len(side, n).min(1 << 12) {
                    let x = model_point(side, n, idx).unwrap();
                    assert!(x > BigRat::zero() && x <= BigRat::one());
                    if let Some(p) = &prev {
                        if idx > 0 || n > 1 {
                            assert!(&x < p || idx == 0, "not decreasing at {side} {n} {idx}");
                        }
                    }
                    assert!(seen.insert(x.clone()), "duplicate point {side} {n} {idx}");
                    prev = Some(x);
                }
                if block_len(side, n) <= 1 << 12 {
                    let (bn, bi) = block_of(side, block_offset(side, n));
                    assert_eq!((bn, bi), (n, 0));
                }
            }
        }
    }

    #[test]
    fn block_boundaries_are_contiguous() {
        for side in [Side::K, Side::L] {
            for n in 1..=30 {
                assert_eq!(block_offset(side, n) + block_len(side, n), block_offset(side, n + 1));
            }
        }
    }

    #[test]
    fn sample_examples() {
        let (vals, sup) = sample(&TestFunction::identity(), Side::L, 2);
        assert_eq!(vals.values, vec![rat(1, 2), rat(1, 3)]);
        assert_eq!(sup, rat(1, 2));
        let (vals, sup) = sample(&TestFunction::constant(rat(-3, 2)), Side::K, 3);
        assert!(vals.values.iter().all(|v| *v == rat(-3, 2)));
        assert_eq!(sup, rat(3, 2));
        let ind = TestFunction::Indicator { threshold: rat(1, 4) };
        let (vals, sup) = sample(&ind, Side::L, 3);
        assert_eq!(vals.values, vec![rat(0, 1), rat(1, 1), rat(1, 1)]);
        assert_eq!(sup, rat(1, 1));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(TestFunction::parse("pow:2").unwrap(), TestFunction::Power(2));
        assert_eq!(
            TestFunction::parse("affine:1/2,-3").unwrap(),
            TestFunction::Affine { a: rat(1, 2), b: rat(-3, 1) }
        );
        assert_eq!(TestFunction::parse("indicator:1/4").unwrap(), TestFunction::Indicator { threshold: rat(1, 4) });
        assert!(TestFunction::parse("sin:1").is_err());
        assert!(TestFunction::parse("pow").is_err());
        assert!(TestFunction::parse("table:nofile").is_err());
        let spec = TestFunction::parse("affine:2,1").unwrap();
        assert_eq!(TestFunction::parse(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn table_from_csv() {
        let csv = "point,value\n0/1,1/2\n1/3,5\n1/7,-1/9\n";
        let t = Table::from_csv_reader(csv.as_bytes()).unwrap();
        let f = TestFunction::Tabulated(t);
        assert_eq!(f.eval(&rat(1, 3)), rat(5, 1));
        assert_eq!(f.eval(&rat(1, 7)), rat(-1, 9));
        assert_eq!(f.eval(&rat(1, 8)), rat(1, 2));
        assert_eq!(f.limit_value(), rat(1, 2));
        assert!(Table::from_csv_reader("point,value\n1/3,5\n".as_bytes()).is_err());
        assert!(Table::from_csv_reader("point,value\n0,1\n2/3,5\n".as_bytes()).is_err());
    }

    #[test]
    fn table_modulus_is_checked() {
        let mut entries = BTreeMap::new();
        entries.insert(rat(1, 2), rat(1, 4));
        entries.insert(rat(1, 10), rat(1, 100));
        let ok = Table::new(entries.clone(), rat(0, 1), Some(rat(1, 2)));
        assert!(ok.check_continuity().is_ok());
        entries.insert(rat(1, 20), rat(1, 2));
        let bad = Table::new(entries, rat(0, 1), Some(rat(1, 2)));
        assert!(TestFunction::Tabulated(bad).check_continuity().is_err());
    }

    #[test]
    fn integrate_agrees_with_grid_routes() {
        for n in 1..=5 {
            let mu = build_mu(n).unwrap();
            let f = TestFunction::Affine { a: rat(3, 1), b: rat(-1, 5) };
            let g = TestFunction::Power(2);
            let prod = ProductFunction::Tensor(f.clone(), g.clone());
            let direct = integrate(&mu, &prod).unwrap();
            let (fv, _) = sample(&f, Side::K, n);
            let (gv, _) = sample(&g, Side::L, n);
            assert_eq!(direct, eval_tensor(&mu, &fv, &gv).unwrap());
        }
    }

    #[test]
    fn indicator_rectangle_matches_index_rectangle() {
        let n = 3;
        let mu = build_mu(n).unwrap();
        let (s, t) = (rat(1, 10), rat(1, 5));
        let f = ProductFunction::Tensor(
            TestFunction::Indicator { threshold: s.clone() },
            TestFunction::Indicator { threshold: t.clone() },
        );
        let rows: Vec<u64> = (0..8).filter(|&i| model_point(Side::K, n, i).unwrap() < s).collect();
        let cols: Vec<u32> = (0..3).filter(|&j| model_point(Side::L, n, j as u64).unwrap() < t).collect();
        let rect = IndexRectangle::new(rows, cols);
        assert_eq!(integrate(&mu, &f).unwrap(), eval_rectangle(&mu, &rect).unwrap());
        assert!(f.as_rectangle().is_some());
    }

    #[test]
    fn radii_separate_neighbours() {
        for p in 0..1000u64 {
            let gap = point_at(p) - point_at(p + 1);
            assert!(isolation_radius(p) + isolation_radius(p + 1) < gap);
            assert!(isolation_radius(p) * BigInt::from(2) < point_at(p));
        }
    }
}
