//! Exact construction and verification of an explicit Josefson-Nissenzweig
//! sequence of finitely supported signed measures on a product of two
//! compact spaces.
//!
//! The measure `mu_n` lives on a `2^n x n` grid of atoms; every atom carries
//! weight `+-1/(n 2^n)` according to a bijection between the `2^n` rows and
//! the sign patterns `{-1,1}^n`. Everything here is computed with exact
//! rationals, and every irrational inequality (those involving `pi` or square
//! roots) is certified by directed rational bounds rather than floating point.
//!
//! Modules:
//!
//! * [`exactmath`]: binomials, the `S_k` identity, Wallis products, `pi` intervals.
//! * [`measures`]: the sign matrix and the measure, evaluated on rectangles and grid functions.
//! * [`rectopt`]: the rectangle supremum, three independent ways, plus strict bounds.
//! * [`spaces`]: a concrete compact model `{0} u {1/m}` and continuous test functions.
//! * [`analysis`]: decay bounds for `f (x) g` and `f (+) g`, convergence tables, generalized sizes.
//! * [`complemented`]: disjoint bump families and the operators `T`, `S`, `P = TS`.
//! * [`cli`]: the `jn-lab` command line driver and report emission.

pub mod analysis;
pub mod cli;
pub mod complemented;
pub mod error;
pub mod exactmath;
pub mod measures;
pub mod rectopt;
pub mod spaces;

pub use error::{Error, Result};
pub use exactmath::{BigRat, Certainty, PiInterval};
pub use measures::{IndexRectangle, JNMeasure, SignMatrix};
