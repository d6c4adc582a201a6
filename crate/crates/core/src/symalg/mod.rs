//! Exact polynomial algebra over observables.
//!
//! Commutative polynomials ([`ClassicalPoly`]) describe classical functions
//! of measurement values; noncommutative polynomials ([`NCPoly`]) describe
//! operator expressions. An [`Algebra`] declares the observables, the scalar
//! symbols, and how each pair of operators commutes. Coefficients are exact
//! complex rationals; `hbar` is always available as a scalar symbol.

mod algebra;
mod matrix;
mod parser;
mod poly;

pub use algebra::{poisson, symmetrized_product, Algebra, AlgebraBuilder, Relation, Simplicity, Unsound};
pub use matrix::nc_to_matrix;
pub use parser::{parse, Expr};
pub use poly::{
    coeff_to_c64, fmt_coeff, rational_to_f64, CMono, ClassicalPoly, Monomial, NCPoly, NcMono, Poly, ScalarMono,
    ScalarMonoKey, ScalarPoly,
};

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;

pub type Rational = BigRational;
pub type Coeff = Complex<Rational>;

/// Reserved scalar symbol for the reduced Planck constant.
pub const HBAR: &str = "hbar";
/// Reserved identifier for the imaginary unit.
pub const IMAG: &str = "i";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn coeff_int(n: i64) -> Coeff {
    Coeff::new(rational(n, 1), rational(0, 1))
}

pub fn coeff(re: Rational, im: Rational) -> Coeff {
    Coeff::new(re, im)
}

/// `i`
pub fn coeff_i() -> Coeff {
    Coeff::new(rational(0, 1), rational(1, 1))
}

/// The scalar polynomial `i * hbar`, the canonical commutator value.
pub fn i_hbar() -> ScalarPoly {
    ScalarPoly::scalar_symbol(HBAR).scale(&coeff_i())
}
