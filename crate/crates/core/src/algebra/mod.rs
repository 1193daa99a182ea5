//! Exact arithmetic kernel: rationals, multivariate polynomials, rational
//! functions in canonical form and the expression language used by input
//! files.

mod expr;
mod poly;
mod ratfunc;

pub use expr::{parse_expression, Expr, ParseError};
pub use poly::{gcd, lcm, resultant, Monomial, MultiPoly, Variables};
pub use ratfunc::{RationalFunction, DEFAULT_POLE_GUARD};

pub(crate) use poly::{format_rational, rational_to_f64};

use num_bigint::BigInt;
use thiserror::Error;

/// Exact rational number; always stored in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("variable lists differ: {left:?} vs {right:?}")]
    Alignment { left: Vec<String>, right: Vec<String> },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("denominator {value:e} is within the pole guard at the evaluation point")]
    Pole { value: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
}
