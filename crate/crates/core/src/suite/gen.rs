//! Random test material: polynomial texts, simple Hamiltonian pairs and
//! operator-rule cases.

use std::collections::BTreeMap;

use rand::Rng;

use crate::arrange::Arrangement;
use crate::opcore::{apply_function, haar_state, HermitianOperator, StateVector};
use crate::symalg::{poisson, Algebra, ClassicalPoly, Symbol};
use crate::Result;

/// Small nonzero rational, rendered as a signed term prefix: `+ 3/2*`.
fn coeff_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    let num: i64 = rng.random_range(1..=6);
    let den: i64 = rng.random_range(1..=3);
    let sign = if rng.random_bool(0.5) { "-" } else { "+" };
    if den == 1 {
        format!(" {sign} {num}")
    } else {
        format!(" {sign} {num}/{den}")
    }
}

fn join(terms: Vec<String>) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let s = terms.concat();
    let s = s.trim_start();
    match s.strip_prefix("+ ") {
        Some(rest) => rest.to_string(),
        None => s.replacen("- ", "-", 1),
    }
}

/// `sum c * v1^e1 * ...` over `vars`, total degree at most `max_deg`.
pub fn random_classical<R: Rng + ?Sized>(rng: &mut R, vars: &[&str], max_deg: u32, max_terms: usize) -> String {
    let n = rng.random_range(1..=max_terms);
    let terms = (0..n)
        .map(|_| {
            let mut t = coeff_text(rng);
            let mut budget = rng.random_range(0..=max_deg);
            for v in vars {
                if budget == 0 {
                    break;
                }
                let e = rng.random_range(0..=budget);
                budget -= e;
                if e > 0 {
                    t.push_str(&format!("*{v}^{e}"));
                }
            }
            t
        })
        .collect();
    join(terms)
}

/// Random ordered words over `syms`, each of length at most `max_len`.
pub fn random_word_poly<R: Rng + ?Sized>(rng: &mut R, syms: &[&str], max_len: usize, max_terms: usize) -> String {
    let n = rng.random_range(1..=max_terms);
    let terms = (0..n)
        .map(|_| {
            let mut t = coeff_text(rng);
            if rng.random_bool(0.25) {
                t.push_str("*i");
            }
            if rng.random_bool(0.25) {
                t.push_str("*hbar");
            }
            for _ in 0..rng.random_range(0..=max_len) {
                t.push('*');
                t.push_str(syms[rng.random_range(0..syms.len())]);
            }
            t
        })
        .collect();
    join(terms)
}

/// Polynomial in one variable: `sum_{k<=deg} c_k v^k`, or zero.
fn univariate<R: Rng + ?Sized>(rng: &mut R, v: &str, max_deg: u32) -> String {
    let deg = rng.random_range(0..=max_deg);
    let mut terms = Vec::new();
    for k in 1..=deg {
        if rng.random_bool(0.7) {
            terms.push(format!("{}*{v}^{k}", coeff_text(rng)));
        }
    }
    join(terms)
}

/// Simple `F`, `H` over the pair `(x, p)` whose Poisson bracket is also
/// simple. Each is `f(x) + g(p)`; pairs with a mixed bracket are resampled.
pub fn random_simple_pair<R: Rng + ?Sized>(rng: &mut R, alg: &Algebra) -> Result<(ClassicalPoly, ClassicalPoly)> {
    loop {
        let f = alg.parse_classical(&format!("{} + {}", univariate(rng, "x", 3), univariate(rng, "p", 3)))?;
        let h = alg.parse_classical(&format!("{} + {}", univariate(rng, "x", 3), univariate(rng, "p", 3)))?;
        let pb = poisson(&f, &h, alg.canonical_pairs())?;
        if alg.is_simple(&f)?.simple && alg.is_simple(&h)?.simple && alg.is_simple(&pb)?.simple && !pb.is_zero() {
            return Ok((f, h));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// `f(a)`
    Function,
    /// `f1(a) + f2(b)`, `[A, B] != 0`
    Sum,
    /// polynomial in `a`, `b` with `[A, B] = 0`
    CommutingProduct,
}

#[derive(Debug, Clone)]
pub struct RuleCase {
    pub kind: RuleKind,
    pub f: String,
    pub a: HermitianOperator,
    pub b: HermitianOperator,
    pub algebra: Algebra,
    pub arrangement: Arrangement,
    pub state: StateVector,
}

impl RuleCase {
    pub fn bindings(&self) -> BTreeMap<Symbol, HermitianOperator> {
        BTreeMap::from([(Symbol::from("a"), self.a.clone()), (Symbol::from("b"), self.b.clone())])
    }
}

/// A random arrangement together with the algebra that knows whether `A`
/// and `B` commute. Dimensions 2 to 6.
pub fn random_rule_case<R: Rng + ?Sized>(rng: &mut R, kind: RuleKind) -> Result<RuleCase> {
    let dim = rng.random_range(2..=6);
    let a = HermitianOperator::random(dim, rng);
    let (b, f) = match kind {
        RuleKind::Function => (HermitianOperator::random(dim, rng), univariate_nonzero(rng, "a", 4)),
        RuleKind::Sum => (
            HermitianOperator::random(dim, rng),
            format!("{} + {}", univariate_nonzero(rng, "a", 3), univariate_nonzero(rng, "b", 3)),
        ),
        RuleKind::CommutingProduct => {
            let (c1, c2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = apply_function(&a, |x| x * x + c1 * x + c2)?;
            (b, random_classical(rng, &["a", "b"], 4, 4))
        }
    };
    let algebra = match kind {
        RuleKind::CommutingProduct => Algebra::builder().observables(["a", "b"]).build()?,
        _ => Algebra::builder().observables(["a", "b"]).noncommuting("a", "b").build()?,
    };
    let arrangement = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine(&f).build()?;
    let state = haar_state(dim, rng);
    Ok(RuleCase { kind, f, a, b, algebra, arrangement, state })
}

fn univariate_nonzero<R: Rng + ?Sized>(rng: &mut R, v: &str, max_deg: u32) -> String {
    loop {
        let s = univariate(rng, v, max_deg);
        if s != "0" {
            return s;
        }
    }
}
