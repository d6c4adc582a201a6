use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{coeff_int, Coeff, Rational, Symbol};
use crate::opcore::C64;
use crate::{Error, Result};

/// Product of scalar symbols with integer (possibly negative) exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarMono(BTreeMap<Symbol, i32>);

impl ScalarMono {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn symbol(s: Symbol) -> Self {
        Self(BTreeMap::from([(s, 1)]))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &BTreeMap<Symbol, i32> {
        &self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (s, e) in &other.0 {
            let x = out.entry(s.clone()).or_insert(0);
            *x += e;
            if *x == 0 {
                out.remove(s);
            }
        }
        Self(out)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|(s, e)| (s.clone(), -e)).collect())
    }

    pub fn eval(&self, values: &BTreeMap<Symbol, f64>) -> Result<f64> {
        let mut acc = 1.0;
        for (s, &e) in &self.0 {
            let v = values.get(s).ok_or_else(|| Error::UnknownSymbol(s.to_string()))?;
            acc *= v.powi(e);
        }
        Ok(acc)
    }

    /// Exact substitution; `None` when a symbol with negative exponent is
    /// bound to zero.
    pub fn substitute(&self, values: &BTreeMap<Symbol, Coeff>) -> Option<(Coeff, ScalarMono)> {
        let mut c = Coeff::one();
        let mut rest = BTreeMap::new();
        for (s, &e) in &self.0 {
            match values.get(s) {
                Some(v) => {
                    if e < 0 && v.is_zero() {
                        return None;
                    }
                    let base = if e < 0 { v.inv() } else { v.clone() };
                    for _ in 0..e.unsigned_abs() {
                        c *= base.clone();
                    }
                }
                None => {
                    rest.insert(s.clone(), e);
                }
            }
        }
        Some((c, Self(rest)))
    }

    fn fmt_parts(&self, num: &mut Vec<String>, den: &mut Vec<String>) {
        for (s, &e) in &self.0 {
            let target = if e > 0 { &mut *num } else { &mut *den };
            target.push(power(s.as_str(), e.unsigned_abs()));
        }
    }
}

fn power(base: &str, e: u32) -> String {
    if e == 1 {
        base.to_string()
    } else {
        format!("{base}^{e}")
    }
}

/// Key type of a polynomial: a scalar part times an observable part.
pub trait Monomial: Ord + Clone + fmt::Debug {
    fn one() -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn from_scalars(s: ScalarMono) -> Self;
    fn from_observable(s: Symbol) -> Self;
    fn scalars(&self) -> &ScalarMono;
    fn with_scalars(&self, s: ScalarMono) -> Self;
    /// Observable factors in product order (commutative keys list them in
    /// key order with multiplicity).
    fn observables(&self) -> Vec<Symbol>;
    fn degree(&self) -> usize {
        self.observables().len()
    }
    fn fmt_observables(&self) -> Vec<String>;
}

/// Commutative monomial: scalars times a multiset of observables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CMono {
    pub scalars: ScalarMono,
    pub vars: BTreeMap<Symbol, u32>,
}

impl Monomial for CMono {
    fn one() -> Self {
        Self::default()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut vars = self.vars.clone();
        for (s, e) in &other.vars {
            *vars.entry(s.clone()).or_insert(0) += e;
        }
        Self { scalars: self.scalars.mul(&other.scalars), vars }
    }

    fn from_scalars(scalars: ScalarMono) -> Self {
        Self { scalars, vars: BTreeMap::new() }
    }

    fn from_observable(s: Symbol) -> Self {
        Self { scalars: ScalarMono::one(), vars: BTreeMap::from([(s, 1)]) }
    }

    fn scalars(&self) -> &ScalarMono {
        &self.scalars
    }

    fn with_scalars(&self, scalars: ScalarMono) -> Self {
        Self { scalars, vars: self.vars.clone() }
    }

    fn observables(&self) -> Vec<Symbol> {
        self.vars.iter().flat_map(|(s, &e)| std::iter::repeat_n(s.clone(), e as usize)).collect()
    }

    fn fmt_observables(&self) -> Vec<String> {
        self.vars.iter().map(|(s, &e)| power(s.as_str(), e)).collect()
    }
}

/// Noncommutative monomial: scalars times an ordered word of operators.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NcMono {
    pub scalars: ScalarMono,
    pub word: Vec<Symbol>,
}

impl Monomial for NcMono {
    fn one() -> Self {
        Self::default()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut word = self.word.clone();
        word.extend(other.word.iter().cloned());
        Self { scalars: self.scalars.mul(&other.scalars), word }
    }

    fn from_scalars(scalars: ScalarMono) -> Self {
        Self { scalars, word: Vec::new() }
    }

    fn from_observable(s: Symbol) -> Self {
        Self { scalars: ScalarMono::one(), word: vec![s] }
    }

    fn scalars(&self) -> &ScalarMono {
        &self.scalars
    }

    fn with_scalars(&self, scalars: ScalarMono) -> Self {
        Self { scalars, word: self.word.clone() }
    }

    fn observables(&self) -> Vec<Symbol> {
        self.word.clone()
    }

    fn fmt_observables(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.word.len() {
            let mut j = i;
            while j < self.word.len() && self.word[j] == self.word[i] {
                j += 1;
            }
            out.push(power(self.word[i].as_str(), (j - i) as u32));
            i = j;
        }
        out
    }
}

/// A polynomial with exact complex-rational coefficients. Zero terms are
/// never stored, so structural equality is mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly<K: Ord> {
    terms: BTreeMap<K, Coeff>,
}

pub type ScalarPoly = Poly<ScalarMonoKey>;
pub type ClassicalPoly = Poly<CMono>;
pub type NCPoly = Poly<NcMono>;

/// Scalar-only key, so scalar polynomials reuse [`Poly`].
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarMonoKey(pub ScalarMono);

impl Monomial for ScalarMonoKey {
    fn one() -> Self {
        Self::default()
    }
    fn mul(&self, other: &Self) -> Self {
        Self(self.0.mul(&other.0))
    }
    fn from_scalars(s: ScalarMono) -> Self {
        Self(s)
    }
    fn from_observable(s: Symbol) -> Self {
        Self(ScalarMono::symbol(s))
    }
    fn scalars(&self) -> &ScalarMono {
        &self.0
    }
    fn with_scalars(&self, s: ScalarMono) -> Self {
        Self(s)
    }
    fn observables(&self) -> Vec<Symbol> {
        Vec::new()
    }
    fn fmt_observables(&self) -> Vec<String> {
        Vec::new()
    }
}

impl<K: Monomial> Default for Poly<K> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<K: Monomial> Poly<K> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: Coeff) -> Self {
        Self::term(K::one(), c)
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(coeff_int(n))
    }

    pub fn term(k: K, c: Coeff) -> Self {
        let mut p = Self::zero();
        p.add_term(k, c);
        p
    }

    pub fn observable(s: impl Into<Symbol>) -> Self {
        Self::term(K::from_observable(s.into()), Coeff::one())
    }

    pub fn scalar_symbol(s: impl Into<Symbol>) -> Self {
        Self::term(K::from_scalars(ScalarMono::symbol(s.into())), Coeff::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&K, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, k: &K) -> Coeff {
        self.terms.get(k).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn add_term(&mut self, k: K, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let mut out = Self::zero();
        if c.is_zero() {
            return out;
        }
        for (k, v) in &self.terms {
            out.terms.insert(k.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(Coeff::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// `(scalars, coefficient)` when the polynomial is a single nonzero term
    /// without observables.
    pub fn as_scalar_term(&self) -> Option<(ScalarMono, Coeff)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, c) = self.terms.iter().next()?;
        k.observables().is_empty().then(|| (k.scalars().clone(), c.clone()))
    }

    /// Whether every term is free of observables.
    pub fn is_scalar(&self) -> bool {
        self.terms.keys().all(|k| k.observables().is_empty())
    }

    /// Multiplicative inverse of a single scalar term.
    pub fn scalar_inverse(&self) -> Option<Self> {
        let (s, c) = self.as_scalar_term()?;
        Some(Self::term(K::from_scalars(s.inverse()), c.inv()))
    }

    /// Multiplies by a scalar polynomial.
    pub fn times_scalar(&self, s: &ScalarPoly) -> Self {
        let mut out = Self::zero();
        for (sk, sc) in s.terms() {
            for (k, c) in &self.terms {
                out.add_term(k.with_scalars(k.scalars().mul(&sk.0)), c.clone() * sc.clone());
            }
        }
        out
    }

    /// Substitutes exact values for the given scalar symbols.
    pub fn substitute_scalars(&self, values: &BTreeMap<Symbol, Coeff>) -> Result<Self> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let (f, rest) = k
                .scalars()
                .substitute(values)
                .ok_or_else(|| Error::InvalidParameter("division by a scalar bound to zero".into()))?;
            out.add_term(k.with_scalars(rest), c.clone() * f);
        }
        Ok(out)
    }

    /// Maps observables through `f`, keeping product order.
    pub fn map_observables(&self, f: impl Fn(&Symbol) -> Symbol) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let mut key = K::from_scalars(k.scalars().clone());
            for s in k.observables() {
                key = key.mul(&K::from_observable(f(&s)));
            }
            out.add_term(key, c.clone());
        }
        out
    }

    /// Every observable symbol that appears.
    pub fn observable_symbols(&self) -> std::collections::BTreeSet<Symbol> {
        self.terms.keys().flat_map(|k| k.observables()).collect()
    }

    pub fn scalar_symbols(&self) -> std::collections::BTreeSet<Symbol> {
        self.terms.keys().flat_map(|k| k.scalars().exponents().keys().cloned().collect::<Vec<_>>()).collect()
    }

    /// Separates the observable-free part.
    pub fn split_constant(&self) -> (ScalarPoly, Self) {
        let mut scalar = ScalarPoly::zero();
        let mut rest = Self::zero();
        for (k, c) in &self.terms {
            if k.observables().is_empty() {
                scalar.add_term(ScalarMonoKey(k.scalars().clone()), c.clone());
            } else {
                rest.add_term(k.clone(), c.clone());
            }
        }
        (scalar, rest)
    }
}

impl ScalarPoly {
    pub fn eval(&self, values: &BTreeMap<Symbol, f64>) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (k, c) in self.terms() {
            acc += coeff_to_c64(c) * k.0.eval(values)?;
        }
        Ok(acc)
    }
}

pub fn coeff_to_c64(c: &Coeff) -> C64 {
    C64::new(rational_to_f64(&c.re), rational_to_f64(&c.im))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

/// Renders a coefficient so that it re-parses: `3/2`, `-i`, `(1 + 2*i)`.
pub fn fmt_coeff(c: &Coeff) -> String {
    let zero = Rational::zero();
    match (c.re == zero, c.im == zero) {
        (_, true) => fmt_rational(&c.re),
        (true, false) => {
            if c.im == Rational::one() {
                "i".into()
            } else if c.im == -Rational::one() {
                "-i".into()
            } else {
                format!("{}*i", fmt_rational(&c.im))
            }
        }
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            format!("({} {} {}*i)", fmt_rational(&c.re), sign, fmt_rational(&c.im.abs()))
        }
    }
}

impl<K: Monomial> fmt::Display for Poly<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            let mut num = Vec::new();
            let mut den = Vec::new();
            k.scalars().fmt_parts(&mut num, &mut den);
            num.extend(k.fmt_observables());
            let neg_real = c.im.is_zero() && c.re.is_negative();
            let mag = if neg_real { Coeff::new(-c.re.clone(), Rational::zero()) } else { c.clone() };
            let mut factors = Vec::new();
            if !(mag.is_one() && !num.is_empty()) {
                factors.push(fmt_coeff(&mag));
            }
            factors.extend(num);
            let mut body = factors.join("*");
            if body.is_empty() {
                body.push('1');
            }
            for d in den {
                body.push('/');
                body.push_str(&d);
            }
            match (n, neg_real) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl<K: Monomial> Add for &Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: Self) -> Poly<K> {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl<K: Monomial> Sub for &Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: Self) -> Poly<K> {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }
}

impl<K: Monomial> Mul for &Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: Self) -> Poly<K> {
        let mut out = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.mul(b), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<K: Monomial> Neg for &Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Poly<K> {
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), -c.clone());
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<K: Monomial> $tr for Poly<K> {
            type Output = Poly<K>;
            fn $m(self, rhs: Self) -> Poly<K> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<K: Monomial> Neg for Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Poly<K> {
        -&self
    }
}

impl ClassicalPoly {
    /// Partial derivative with respect to an observable.
    pub fn derivative(&self, s: &Symbol) -> Self {
        let mut out = Self::zero();
        for (k, c) in self.terms() {
            if let Some(&e) = k.vars.get(s) {
                let mut vars = k.vars.clone();
                if e == 1 {
                    vars.remove(s);
                } else {
                    vars.insert(s.clone(), e - 1);
                }
                out.add_term(CMono { scalars: k.scalars.clone(), vars }, c.clone() * coeff_int(e as i64));
            }
        }
        out
    }
}
