use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::parser::parse;
use super::poly::{CMono, ClassicalPoly, Monomial, NCPoly, NcMono, ScalarMono, ScalarMonoKey, ScalarPoly};
use super::{coeff, i_hbar, rational, Coeff, Symbol, HBAR, IMAG};
use crate::{Error, Result};

/// How an ordered pair `(X, Y)` of operators, `X` preceding `Y`, commutes.
#[derive(Debug, Clone, PartialEq)]
pub enum Relation {
    Commuting,
    /// Noncommuting with no closed form; normal ordering cannot pass one
    /// of these past the other.
    Opaque,
    /// `[X, Y] = c * 1` with `c` a nonzero scalar polynomial.
    Scalar(ScalarPoly),
}

impl Relation {
    pub fn commutes(&self) -> bool {
        matches!(self, Relation::Commuting)
    }
}

/// Result of the simplicity test.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplicity {
    pub simple: bool,
    pub offenders: Vec<CMono>,
}

/// An operator expression obtained with the symmetrized-product rule. The
/// wrapper keeps such results from being mistaken for sound quantizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Unsound<T>(pub T);

impl<T> Unsound<T> {
    pub fn into_inner(self) -> T {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Algebra {
    observables: Vec<Symbol>,
    rank: BTreeMap<Symbol, usize>,
    scalars: BTreeSet<Symbol>,
    /// Keyed by ranks `(i, j)` with `i < j`; missing pairs use `default`.
    relations: BTreeMap<(usize, usize), Relation>,
    default: Relation,
    canonical_pairs: Vec<(Symbol, Symbol)>,
}

#[derive(Debug, Clone, Default)]
pub struct AlgebraBuilder {
    observables: Vec<Symbol>,
    scalars: Vec<Symbol>,
    decls: Vec<(Symbol, Symbol, Option<ScalarPoly>, bool)>,
    pairs: Vec<(Symbol, Symbol)>,
    precedence: Option<Vec<Symbol>>,
    default_opaque: bool,
}

impl AlgebraBuilder {
    pub fn observable(mut self, s: impl Into<Symbol>) -> Self {
        self.observables.push(s.into());
        self
    }

    pub fn observables<S: Into<Symbol>>(mut self, s: impl IntoIterator<Item = S>) -> Self {
        self.observables.extend(s.into_iter().map(Into::into));
        self
    }

    pub fn scalar(mut self, s: impl Into<Symbol>) -> Self {
        self.scalars.push(s.into());
        self
    }

    pub fn scalars<S: Into<Symbol>>(mut self, s: impl IntoIterator<Item = S>) -> Self {
        self.scalars.extend(s.into_iter().map(Into::into));
        self
    }

    /// Declares `[q, p] = i*hbar`; `q` is position-like and `p` momentum-like
    /// for the default precedence.
    pub fn canonical_pair(mut self, q: impl Into<Symbol>, p: impl Into<Symbol>) -> Self {
        let (q, p) = (q.into(), p.into());
        for s in [&q, &p] {
            if !self.observables.contains(s) {
                self.observables.push(s.clone());
            }
        }
        self.decls.push((q.clone(), p.clone(), Some(i_hbar()), false));
        self.pairs.push((q, p));
        self
    }

    /// Declares `[a, b] = c`.
    pub fn commutator(mut self, a: impl Into<Symbol>, b: impl Into<Symbol>, c: ScalarPoly) -> Self {
        self.decls.push((a.into(), b.into(), Some(c), false));
        self
    }

    pub fn noncommuting(mut self, a: impl Into<Symbol>, b: impl Into<Symbol>) -> Self {
        self.decls.push((a.into(), b.into(), None, true));
        self
    }

    pub fn commuting(mut self, a: impl Into<Symbol>, b: impl Into<Symbol>) -> Self {
        self.decls.push((a.into(), b.into(), None, false));
        self
    }

    /// Undeclared pairs are noncommuting (opaque) rather than commuting.
    pub fn free(mut self) -> Self {
        self.default_opaque = true;
        self
    }

    pub fn precedence<S: Into<Symbol>>(mut self, order: impl IntoIterator<Item = S>) -> Self {
        self.precedence = Some(order.into_iter().map(Into::into).collect());
        self
    }

    pub fn build(self) -> Result<Algebra> {
        let mut seen = BTreeSet::new();
        let reserved = [Symbol::from(HBAR), Symbol::from(IMAG)];
        for s in self.observables.iter().chain(&self.scalars) {
            if reserved.contains(s) || !seen.insert(s.clone()) {
                return Err(Error::DuplicateSymbol(s.to_string()));
            }
        }
        let order = match self.precedence {
            Some(p) => {
                let ps: BTreeSet<_> = p.iter().cloned().collect();
                let os: BTreeSet<_> = self.observables.iter().cloned().collect();
                if ps != os || p.len() != ps.len() {
                    return Err(Error::InvalidParameter(
                        "precedence must list every observable exactly once".into(),
                    ));
                }
                p
            }
            None => {
                let positions: BTreeSet<_> = self.pairs.iter().map(|(q, _)| q.clone()).collect();
                let momenta: BTreeSet<_> =
                    self.pairs.iter().map(|(_, p)| p.clone()).filter(|p| !positions.contains(p)).collect();
                let others: BTreeSet<_> = self
                    .observables
                    .iter()
                    .filter(|s| !positions.contains(*s) && !momenta.contains(*s))
                    .cloned()
                    .collect();
                positions.into_iter().chain(momenta).chain(others).collect()
            }
        };
        let rank: BTreeMap<_, _> = order.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut relations = BTreeMap::new();
        for (a, b, c, opaque) in self.decls {
            let ra = *rank.get(&a).ok_or_else(|| Error::UnknownSymbol(a.to_string()))?;
            let rb = *rank.get(&b).ok_or_else(|| Error::UnknownSymbol(b.to_string()))?;
            if ra == rb {
                return Err(Error::InvalidParameter(format!("relation of `{a}` with itself")));
            }
            let rel = match (c, opaque) {
                (_, true) => Relation::Opaque,
                (None, false) => Relation::Commuting,
                (Some(c), _) if c.is_zero() => Relation::Commuting,
                // [b, a] = -[a, b]
                (Some(c), _) => Relation::Scalar(if ra < rb { c } else { -c }),
            };
            relations.insert((ra.min(rb), ra.max(rb)), rel);
        }
        let mut scalars: BTreeSet<_> = self.scalars.into_iter().collect();
        scalars.insert(Symbol::from(HBAR));
        Ok(Algebra {
            observables: order,
            rank,
            scalars,
            relations,
            default: if self.default_opaque { Relation::Opaque } else { Relation::Commuting },
            canonical_pairs: self.pairs,
        })
    }
}

impl Algebra {
    pub fn builder() -> AlgebraBuilder {
        AlgebraBuilder::default()
    }

    /// One canonical pair `[x, p] = i*hbar` plus the given scalars.
    pub fn canonical<S: Into<Symbol>>(x: &str, p: &str, scalars: impl IntoIterator<Item = S>) -> Self {
        Self::builder().canonical_pair(x, p).scalars(scalars).build().expect("valid canonical algebra")
    }

    pub fn observables(&self) -> &[Symbol] {
        &self.observables
    }

    pub fn scalars(&self) -> &BTreeSet<Symbol> {
        &self.scalars
    }

    pub fn canonical_pairs(&self) -> &[(Symbol, Symbol)] {
        &self.canonical_pairs
    }

    pub fn is_observable(&self, s: &Symbol) -> bool {
        self.rank.contains_key(s)
    }

    pub fn is_scalar(&self, s: &Symbol) -> bool {
        self.scalars.contains(s)
    }

    fn rank_of(&self, s: &Symbol) -> Result<usize> {
        self.rank.get(s).copied().ok_or_else(|| Error::UnknownSymbol(s.to_string()))
    }

    /// `[a, b]` as a relation oriented from `a` to `b`.
    pub fn relation(&self, a: &Symbol, b: &Symbol) -> Result<Relation> {
        let (ra, rb) = (self.rank_of(a)?, self.rank_of(b)?);
        if ra == rb {
            return Ok(Relation::Commuting);
        }
        let rel = self.relations.get(&(ra.min(rb), ra.max(rb))).unwrap_or(&self.default).clone();
        Ok(match rel {
            Relation::Scalar(c) if ra > rb => Relation::Scalar(-c),
            r => r,
        })
    }

    pub fn commutes(&self, a: &Symbol, b: &Symbol) -> Result<bool> {
        Ok(self.relation(a, b)?.commutes())
    }

    pub fn parse_classical(&self, text: &str) -> Result<ClassicalPoly> {
        parse(text)?.evaluate(self)
    }

    pub fn parse_operator(&self, text: &str) -> Result<NCPoly> {
        parse(text)?.evaluate(self)
    }

    /// A polynomial is simple when no monomial multiplies two observables
    /// whose operators fail to commute.
    pub fn is_simple(&self, f: &ClassicalPoly) -> Result<Simplicity> {
        let mut offenders = Vec::new();
        for (k, _) in f.terms() {
            let syms: Vec<&Symbol> = k.vars.keys().collect();
            for s in &syms {
                self.rank_of(s)?;
            }
            let mut bad = false;
            'pairs: for (i, a) in syms.iter().enumerate() {
                for b in &syms[i + 1..] {
                    if !self.commutes(a, b)? {
                        bad = true;
                        break 'pairs;
                    }
                }
            }
            if bad {
                offenders.push(k.clone());
            }
        }
        Ok(Simplicity { simple: offenders.is_empty(), offenders })
    }

    /// Maps a simple classical polynomial to its operator: each monomial
    /// becomes the product of the bound operators (in precedence order,
    /// which is immaterial since they commute).
    pub fn quantize(&self, f: &ClassicalPoly, bindings: &BTreeMap<Symbol, Symbol>) -> Result<NCPoly> {
        let bound = f.map_observables(|s| bindings.get(s).cloned().unwrap_or_else(|| s.clone()));
        let check = self.is_simple(&bound)?;
        if !check.simple {
            let names = check
                .offenders
                .iter()
                .map(|k| ClassicalPoly::term(k.clone(), Coeff::new(rational(1, 1), rational(0, 1))).to_string())
                .collect();
            return Err(Error::NotSimple(names));
        }
        let mut out = NCPoly::zero();
        for (k, c) in bound.terms() {
            let mut word: Vec<(usize, Symbol)> = Vec::new();
            for (s, &e) in &k.vars {
                let r = self.rank_of(s)?;
                word.extend(std::iter::repeat_n((r, s.clone()), e as usize));
            }
            word.sort();
            out.add_term(
                NcMono { scalars: k.scalars.clone(), word: word.into_iter().map(|(_, s)| s).collect() },
                c.clone(),
            );
        }
        Ok(out)
    }

    /// The symmetrized-product rule `f1 f2 -> (F1 F2 + F2 F1) / 2` applied
    /// to a factorization of `f`. Each factor is quantized on its own and must
    /// be simple.
    pub fn hermitize_unsound(
        &self,
        f: &ClassicalPoly,
        bindings: &BTreeMap<Symbol, Symbol>,
        grouping: (&ClassicalPoly, &ClassicalPoly),
        acknowledge_unsound: bool,
    ) -> Result<Unsound<NCPoly>> {
        if !acknowledge_unsound {
            return Err(Error::FlagMissing);
        }
        if &(grouping.0 * grouping.1) != f {
            return Err(Error::GroupingMismatch);
        }
        let a = self.quantize(grouping.0, bindings)?;
        let b = self.quantize(grouping.1, bindings)?;
        symmetrized_product(&a, &b, true)
    }

    /// Normal ordering: every word is rewritten into precedence order using
    /// `Y X = X Y - [X, Y]` for scalar commutators and plain swaps for
    /// commuting pairs.
    pub fn normal_form(&self, p: &NCPoly) -> Result<NCPoly> {
        let mut memo = HashMap::new();
        let mut out = NCPoly::zero();
        for (k, c) in p.terms() {
            let nf = self.normal_word(&k.word, &mut memo)?;
            for (nk, nc) in nf.terms() {
                out.add_term(
                    NcMono { scalars: nk.scalars.mul(&k.scalars), word: nk.word.clone() },
                    nc.clone() * c.clone(),
                );
            }
        }
        Ok(out)
    }

    fn normal_word(&self, word: &[Symbol], memo: &mut HashMap<Vec<Symbol>, NCPoly>) -> Result<NCPoly> {
        if let Some(p) = memo.get(word) {
            return Ok(p.clone());
        }
        let ranks = word.iter().map(|s| self.rank_of(s)).collect::<Result<Vec<_>>>()?;
        let Some(i) = (0..word.len().saturating_sub(1)).find(|&i| ranks[i] > ranks[i + 1]) else {
            let p = NCPoly::term(NcMono { scalars: ScalarMono::one(), word: word.to_vec() }, one());
            memo.insert(word.to_vec(), p.clone());
            return Ok(p);
        };
        let (y, x) = (&word[i], &word[i + 1]);
        let mut swapped = word.to_vec();
        swapped.swap(i, i + 1);
        let result = match self.relation(x, y)? {
            Relation::Commuting => self.normal_word(&swapped, memo)?,
            Relation::Opaque => return Err(Error::NonScalarCommutator(y.to_string(), x.to_string())),
            Relation::Scalar(k) => {
                // y x = x y - [x, y]
                let mut shorter = word[..i].to_vec();
                shorter.extend_from_slice(&word[i + 2..]);
                let tail = self.normal_word(&shorter, memo)?.times_scalar(&k);
                &self.normal_word(&swapped, memo)? - &tail
            }
        };
        memo.insert(word.to_vec(), result.clone());
        Ok(result)
    }

    /// `nf(p q - q p)`.
    pub fn commutator(&self, p: &NCPoly, q: &NCPoly) -> Result<NCPoly> {
        self.normal_form(&(&(p * q) - &(q * p)))
    }
}

/// `(p q + q p) / 2`.
pub fn symmetrized_product(p: &NCPoly, q: &NCPoly, acknowledge_unsound: bool) -> Result<Unsound<NCPoly>> {
    if !acknowledge_unsound {
        return Err(Error::FlagMissing);
    }
    let half = coeff(rational(1, 2), rational(0, 1));
    Ok(Unsound((&(p * q) + &(q * p)).scale(&half)))
}

impl Algebra {
    pub fn symmetrized_product(&self, p: &NCPoly, q: &NCPoly, acknowledge_unsound: bool) -> Result<Unsound<NCPoly>> {
        symmetrized_product(p, q, acknowledge_unsound)
    }
}

fn one() -> Coeff {
    coeff(rational(1, 1), rational(0, 1))
}

/// Poisson bracket `sum_i dF/dq_i dH/dp_i - dH/dq_i dF/dp_i`. Every
/// observable in `F` and `H` must belong to one of the canonical pairs.
pub fn poisson(f: &ClassicalPoly, h: &ClassicalPoly, pairs: &[(Symbol, Symbol)]) -> Result<ClassicalPoly> {
    let known: BTreeSet<&Symbol> = pairs.iter().flat_map(|(q, p)| [q, p]).collect();
    for s in f.observable_symbols().iter().chain(h.observable_symbols().iter()) {
        if !known.contains(s) {
            return Err(Error::UnknownSymbol(s.to_string()));
        }
    }
    let mut out = ClassicalPoly::zero();
    for (q, p) in pairs {
        out = &out + &(&(&f.derivative(q) * &h.derivative(p)) - &(&h.derivative(q) * &f.derivative(p)));
    }
    Ok(out)
}

impl From<ScalarPoly> for NCPoly {
    fn from(s: ScalarPoly) -> Self {
        let mut out = NCPoly::zero();
        for (k, c) in s.terms() {
            out.add_term(NcMono::from_scalars(k.0.clone()), c.clone());
        }
        out
    }
}

impl From<ScalarMonoKey> for ScalarMono {
    fn from(k: ScalarMonoKey) -> Self {
        k.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::{coeff_i, coeff_int};

    fn sym(s: &str) -> Symbol {
        Symbol::from(s)
    }

    #[test]
    fn poisson_examples() {
        let alg = Algebra::canonical("x", "p", ["c", "gamma"]);
        let pairs = alg.canonical_pairs().to_vec();
        let x = alg.parse_classical("x").unwrap();
        let p = alg.parse_classical("p").unwrap();
        assert_eq!(poisson(&x, &p, &pairs).unwrap(), ClassicalPoly::integer(1));
        let h = alg.parse_classical("c*p").unwrap();
        assert_eq!(poisson(&x, &h, &pairs).unwrap(), alg.parse_classical("c").unwrap());
        let f = alg.parse_classical("x^3").unwrap();
        let h = alg.parse_classical("gamma*p^3").unwrap();
        assert_eq!(poisson(&f, &h, &pairs).unwrap(), alg.parse_classical("9*gamma*x^2*p^2").unwrap());
        let stray = ClassicalPoly::observable("y");
        assert!(matches!(poisson(&stray, &h, &pairs), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn simplicity() {
        let nc = Algebra::builder().observables(["a", "b"]).noncommuting("a", "b").build().unwrap();
        let c = Algebra::builder().observables(["a", "b"]).build().unwrap();
        let sum = nc.parse_classical("a + b").unwrap();
        assert!(nc.is_simple(&sum).unwrap().simple);
        let prod = nc.parse_classical("a*b + a^2").unwrap();
        let s = nc.is_simple(&prod).unwrap();
        assert!(!s.simple);
        assert_eq!(s.offenders.len(), 1);
        assert_eq!(ClassicalPoly::term(s.offenders[0].clone(), one()).to_string(), "a*b");
        assert!(c.is_simple(&c.parse_classical("a*b").unwrap()).unwrap().simple);
        assert!(matches!(c.is_simple(&ClassicalPoly::observable("z")), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn quantize_rules() {
        let alg = Algebra::canonical("x", "p", ["c", "eps"]);
        let none = BTreeMap::new();
        let cp = alg.quantize(&alg.parse_classical("c*p").unwrap(), &none).unwrap();
        assert_eq!(cp, alg.parse_operator("c*p").unwrap());
        let shifted = alg.quantize(&alg.parse_classical("x + eps").unwrap(), &none).unwrap();
        assert_eq!(shifted, alg.parse_operator("x + eps").unwrap());
        let nc = Algebra::builder().observables(["A", "B"]).noncommuting("A", "B").build().unwrap();
        let binds = BTreeMap::from([(sym("a"), sym("A")), (sym("b"), sym("B"))]);
        let classical = Algebra::builder().observables(["a", "b"]).build().unwrap();
        let ab = classical.parse_classical("a*b").unwrap();
        assert!(matches!(nc.quantize(&ab, &binds), Err(Error::NotSimple(_))));
        let sum = classical.parse_classical("a^2 + 3*b").unwrap();
        assert_eq!(nc.quantize(&sum, &binds).unwrap(), nc.parse_operator("A^2 + 3*B").unwrap());
    }

    #[test]
    fn hermitization_examples() {
        let alg = Algebra::builder().observables(["A", "B"]).free().build().unwrap();
        let none = BTreeMap::new();
        let a = alg.parse_classical("A").unwrap();
        let b = alg.parse_classical("B").unwrap();
        let ab = &a * &b;
        let herm = alg.hermitize_unsound(&ab, &none, (&a, &b), true).unwrap().into_inner();
        assert_eq!(herm, alg.parse_operator("(A*B + B*A)/2").unwrap());
        assert_eq!(alg.hermitize_unsound(&ab, &none, (&a, &b), false), Err(Error::FlagMissing));
        assert_eq!(alg.hermitize_unsound(&ab, &none, (&a, &a), true), Err(Error::GroupingMismatch));

        let a_op = alg.parse_operator("A").unwrap();
        let nested = alg.symmetrized_product(&a_op, &herm, true).unwrap().into_inner();
        assert_eq!(nested, alg.parse_operator("(A^2*B + 2*A*B*A + B*A^2)/4").unwrap());
        let a2 = &a * &a;
        let grouped = alg.hermitize_unsound(&(&a2 * &b), &none, (&a2, &b), true).unwrap().into_inner();
        assert_eq!(grouped, alg.parse_operator("(A^2*B + B*A^2)/2").unwrap());
    }

    #[test]
    fn normal_ordering() {
        let alg = Algebra::canonical("x", "p", ["gamma"]);
        let px = alg.parse_operator("p*x").unwrap();
        assert_eq!(alg.normal_form(&px).unwrap(), alg.parse_operator("x*p - i*hbar").unwrap());
        let ordered = alg.parse_operator("x^2*p + 3*x").unwrap();
        assert_eq!(alg.normal_form(&ordered).unwrap(), ordered);
        let f = alg.parse_operator("x^3").unwrap();
        let h = alg.parse_operator("gamma*p^3").unwrap();
        let k = alg.commutator(&f, &h).unwrap();
        let expected =
            alg.parse_operator("9*i*gamma*hbar*x^2*p^2 + 18*gamma*hbar^2*x*p - 6*i*gamma*hbar^3").unwrap();
        assert_eq!(k, expected);
        let x = alg.parse_operator("x").unwrap();
        let p = alg.parse_operator("p").unwrap();
        assert_eq!(alg.commutator(&x, &p).unwrap(), NCPoly::from(i_hbar()));
        assert!(alg.commutator(&p, &p.pow(2)).unwrap().is_zero());
    }

    #[test]
    fn opaque_pairs_cannot_be_ordered() {
        let alg = Algebra::builder().observables(["A", "B"]).free().build().unwrap();
        let ba = alg.parse_operator("B*A").unwrap();
        assert!(matches!(alg.normal_form(&ba), Err(Error::NonScalarCommutator(_, _))));
        assert_eq!(alg.normal_form(&alg.parse_operator("A*B").unwrap()).unwrap(), alg.parse_operator("A*B").unwrap());
    }

    #[test]
    fn reversed_declaration_flips_sign() {
        let alg = Algebra::builder()
            .observables(["x", "p"])
            .commutator("p", "x", i_hbar().scale(&coeff_int(-1)))
            .precedence(["x", "p"])
            .build()
            .unwrap();
        assert_eq!(alg.relation(&sym("x"), &sym("p")).unwrap(), Relation::Scalar(i_hbar()));
        let px = alg.parse_operator("p*x").unwrap();
        assert_eq!(alg.normal_form(&px).unwrap(), alg.parse_operator("x*p - i*hbar").unwrap());
        let _ = coeff_i();
    }

    #[test]
    fn duplicate_and_reserved_symbols_rejected() {
        assert!(Algebra::builder().observables(["x", "x"]).build().is_err());
        assert!(Algebra::builder().observable("hbar").build().is_err());
        assert!(Algebra::builder().observable("x").scalar("x").build().is_err());
    }
}
