//! Differential-operator model of one canonical pair, used as ground truth
//! for normal ordering: `x` acts on polynomials in `x` by multiplication and
//! `p` as `-i hbar d/dx`, with every scalar symbol bound to an exact value.
//! Nothing here touches the rewriting code.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::symalg::{Coeff, NCPoly, Rational, Symbol, HBAR};
use crate::{Error, Result};

/// Polynomial in `x`; index is the degree.
pub type XPoly = Vec<Coeff>;

#[derive(Debug, Clone)]
pub struct DiffOracle {
    position: Symbol,
    momentum: Symbol,
    values: BTreeMap<Symbol, Coeff>,
}

fn trim(mut p: XPoly) -> XPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

impl DiffOracle {
    /// `values` must bind `hbar` and every other scalar symbol that occurs.
    pub fn new(position: &str, momentum: &str, values: BTreeMap<Symbol, Coeff>) -> Result<Self> {
        if !values.contains_key(&Symbol::from(HBAR)) {
            return Err(Error::UnknownSymbol(HBAR.into()));
        }
        Ok(Self { position: position.into(), momentum: momentum.into(), values })
    }

    fn hbar(&self) -> &Coeff {
        &self.values[&Symbol::from(HBAR)]
    }

    fn times_x(p: &XPoly) -> XPoly {
        let mut out = vec![Coeff::zero()];
        out.extend(p.iter().cloned());
        trim(out)
    }

    fn apply_p(&self, p: &XPoly) -> XPoly {
        // -i hbar d/dx
        let f = Coeff::new(Rational::zero(), -Rational::one()) * self.hbar().clone();
        let out = p
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * Coeff::new(Rational::from_integer(k.into()), Rational::zero()) * f.clone())
            .collect();
        trim(out)
    }

    /// Applies `op` to the polynomial `f`.
    pub fn apply(&self, op: &NCPoly, f: &XPoly) -> Result<XPoly> {
        let mut total: XPoly = Vec::new();
        for (k, c) in op.terms() {
            let (s, rest) = k.scalars.substitute(&self.values).ok_or(Error::DomainError(0.0))?;
            if !rest.is_one() {
                let name = rest.exponents().keys().next().map(|s| s.to_string()).unwrap_or_default();
                return Err(Error::UnknownSymbol(name));
            }
            let mut g = f.clone();
            for sym in k.word.iter().rev() {
                g = if *sym == self.position {
                    Self::times_x(&g)
                } else if *sym == self.momentum {
                    self.apply_p(&g)
                } else {
                    return Err(Error::UnknownSymbol(sym.to_string()));
                };
            }
            let w = c.clone() * s;
            if total.len() < g.len() {
                total.resize(g.len(), Coeff::zero());
            }
            for (i, gi) in g.into_iter().enumerate() {
                total[i] = total[i].clone() + gi * w.clone();
            }
        }
        Ok(trim(total))
    }

    /// `x^k`
    pub fn monomial(k: usize) -> XPoly {
        let mut p = vec![Coeff::zero(); k + 1];
        p[k] = Coeff::one();
        p
    }

    /// Whether `a` and `b` act identically on `1, x, ..., x^max_degree`.
    pub fn same_action(&self, a: &NCPoly, b: &NCPoly, max_degree: usize) -> Result<bool> {
        for k in 0..=max_degree {
            let m = Self::monomial(k);
            if self.apply(a, &m)? != self.apply(b, &m)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// If `op` acts as multiplication by a constant on `1, ..., x^max_degree`,
    /// returns that constant.
    pub fn as_constant(&self, op: &NCPoly, max_degree: usize) -> Result<Option<Coeff>> {
        let mut value: Option<Coeff> = None;
        for k in 0..=max_degree {
            let out = self.apply(op, &Self::monomial(k))?;
            let lambda = if out.is_empty() {
                Coeff::zero()
            } else if out.len() == k + 1 && out[..k].iter().all(|c| c.is_zero()) {
                out[k].clone()
            } else {
                return Ok(None);
            };
            match &value {
                Some(v) if *v != lambda => return Ok(None),
                Some(_) => {}
                None => value = Some(lambda),
            }
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::{rational, Algebra};

    fn oracle(h: (i64, i64)) -> DiffOracle {
        let v = BTreeMap::from([
            (Symbol::from(HBAR), Coeff::new(rational(h.0, h.1), Rational::zero())),
            (Symbol::from("g"), Coeff::new(rational(5, 3), Rational::zero())),
        ]);
        DiffOracle::new("x", "p", v).unwrap()
    }

    #[test]
    fn canonical_commutator_is_i_hbar() {
        let alg = Algebra::canonical("x", "p", ["g"]);
        let c = alg.parse_operator("x*p - p*x").unwrap();
        let k = oracle((2, 7)).as_constant(&c, 6).unwrap().unwrap();
        assert_eq!(k, Coeff::new(Rational::zero(), rational(2, 7)));
        let not_const = alg.parse_operator("x*p").unwrap();
        assert_eq!(oracle((2, 7)).as_constant(&not_const, 4).unwrap(), None);
    }

    #[test]
    fn missing_bindings() {
        let alg = Algebra::canonical("x", "p", ["g", "m"]);
        let e = alg.parse_operator("m*x").unwrap();
        assert_eq!(oracle((1, 1)).apply(&e, &DiffOracle::monomial(1)), Err(Error::UnknownSymbol("m".into())));
    }
}
