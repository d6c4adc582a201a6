//! Classical measurement arrangements and their quantum models.
//!
//! An [`Arrangement`] lists elementary measurements performed at `t1`, the
//! copy of the system each one is performed on, and a polynomial `f` that
//! combines their values. A target measurement at `t2` (on its own copy) is
//! what the arrangement is meant to implement. Copies are prepared in the
//! same state at `t0` and evolve in the same background.
//!
//! Copy rules: measurements on one copy must pairwise commute; commuting
//! measurements on the same subsystem belong on one copy. The first rule is
//! enforced at construction unless
//! [`ArrangementBuilder::sequential_noncommuting`] is set. The second is
//! only reported by [`Arrangement::conformance`], since deliberately
//! breaking it is how the non-representable arrangements are built.

mod exact;
mod mc;
mod solve;

pub use exact::{avcp_check, exact_expected_output, AvcpReport};
pub use mc::{mc_expected_output, McEstimate, McOptions, RunRecord};
pub use solve::{solve_representing_operator, Representation, SolveOptions};

use std::collections::BTreeMap;

use rand::Rng;

use crate::dynamics::propagator;
use crate::opcore::{commute, haar_state, ComplexMatrix, HermitianOperator, StateVector};
use crate::symalg::{coeff_to_c64, Algebra, ClassicalPoly, Monomial, Symbol, HBAR};
use crate::{Error, Result};

/// Default tolerance for deciding that two operators commute, relative to
/// the product of their norms.
pub const COMMUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureTime {
    T1,
    T2,
}

#[derive(Debug, Clone)]
pub struct MeasurementDecl {
    pub label: String,
    pub operator: HermitianOperator,
    pub subsystem: Option<usize>,
    pub time: MeasureTime,
}

/// Time-independent background Hamiltonian shared by all copies.
#[derive(Debug, Clone)]
pub struct Background {
    pub hamiltonian: HermitianOperator,
    pub hbar: f64,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Background {
    fn evolve(&self, v0: &StateVector, t: f64) -> Result<StateVector> {
        v0.evolve(&propagator(&self.hamiltonian, t - self.t0, self.hbar)?)
    }

    /// `W` with `v_{t2} = W v_{t1}`; an operator `X` measured at `t1` has the
    /// same average as `W X W^dagger` measured at `t2`.
    pub fn transfer(&self) -> Result<ComplexMatrix> {
        propagator(&self.hamiltonian, self.t2 - self.t1, self.hbar)
    }
}

/// Greedy coloring of the noncommutation graph in declaration order: each
/// measurement goes on the first copy whose members all commute with it.
pub fn assign_copies(measurements: &[MeasurementDecl], commute_tol: f64) -> Result<Vec<usize>> {
    let mut copies: Vec<Vec<usize>> = Vec::new();
    let mut out = Vec::with_capacity(measurements.len());
    for (i, m) in measurements.iter().enumerate() {
        let mut slot = None;
        for (c, members) in copies.iter().enumerate() {
            let mut ok = true;
            for &j in members {
                if !commute(&m.operator, &measurements[j].operator, commute_tol)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                slot = Some(c);
                break;
            }
        }
        let c = slot.unwrap_or_else(|| {
            copies.push(Vec::new());
            copies.len() - 1
        });
        copies[c].push(i);
        out.push(c);
    }
    Ok(out)
}

/// `f` compiled to floating point: `sum_k c_k prod_l x_l^e_kl`.
#[derive(Debug, Clone)]
pub(crate) struct Combiner {
    pub(crate) terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl Combiner {
    fn compile(f: &ClassicalPoly, labels: &[String], scalars: &BTreeMap<Symbol, f64>) -> Result<Self> {
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut terms = Vec::new();
        for (k, c) in f.terms() {
            let z = coeff_to_c64(c) * k.scalars().eval(scalars)?;
            if z.im != 0.0 {
                return Err(Error::NotReal(z.im));
            }
            let mut powers = Vec::new();
            for (s, &e) in &k.vars {
                let i = *index.get(s.as_str()).ok_or_else(|| Error::UnknownLabel(s.to_string()))?;
                powers.push((i, e as i32));
            }
            terms.push((z.re, powers));
        }
        Ok(Self { terms })
    }

    pub(crate) fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, powers)| c * powers.iter().map(|&(i, e)| values[i].powi(e)).product::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct Arrangement {
    measurements: Vec<MeasurementDecl>,
    copies: Vec<usize>,
    target: Option<MeasurementDecl>,
    combining: ClassicalPoly,
    combiner: Combiner,
    background: Option<Background>,
    commute_tol: f64,
    dim: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ArrangementBuilder {
    measurements: Vec<MeasurementDecl>,
    copies: Option<Vec<usize>>,
    target: Option<MeasurementDecl>,
    combine_text: Option<String>,
    combine_poly: Option<ClassicalPoly>,
    scalars: BTreeMap<Symbol, f64>,
    background: Option<Background>,
    commute_tol: Option<f64>,
    allow_noncommuting: bool,
}

impl ArrangementBuilder {
    /// A measurement at `t1`.
    pub fn measure(self, label: &str, operator: HermitianOperator) -> Self {
        self.push(label, operator, None)
    }

    /// A measurement at `t1` tagged with the subsystem it acts on. The
    /// operator must already be embedded in the full space.
    pub fn measure_on(self, label: &str, operator: HermitianOperator, subsystem: usize) -> Self {
        self.push(label, operator, Some(subsystem))
    }

    fn push(mut self, label: &str, operator: HermitianOperator, subsystem: Option<usize>) -> Self {
        self.measurements.push(MeasurementDecl { label: label.to_string(), operator, subsystem, time: MeasureTime::T1 });
        self
    }

    pub fn target(mut self, label: &str, operator: HermitianOperator) -> Self {
        self.target = Some(MeasurementDecl { label: label.to_string(), operator, subsystem: None, time: MeasureTime::T2 });
        self
    }

    /// Explicit copy index per measurement, in declaration order.
    pub fn copies(mut self, copies: Vec<usize>) -> Self {
        self.copies = Some(copies);
        self
    }

    pub fn combine(mut self, text: &str) -> Self {
        self.combine_text = Some(text.to_string());
        self.combine_poly = None;
        self
    }

    pub fn combine_poly(mut self, f: ClassicalPoly) -> Self {
        self.combine_poly = Some(f);
        self.combine_text = None;
        self
    }

    /// Numeric value of a scalar symbol appearing in `f`. `hbar` defaults
    /// to the background's value, or 1.
    pub fn scalar(mut self, name: &str, value: f64) -> Self {
        self.scalars.insert(Symbol::from(name), value);
        self
    }

    pub fn background(mut self, b: Background) -> Self {
        self.background = Some(b);
        self
    }

    /// Permits noncommuting measurements on one copy, performed in
    /// declaration order. Such arrangements break the copy rules (see
    /// [`Arrangement::conformance`]) and exist to model naive set-ups.
    pub fn sequential_noncommuting(mut self) -> Self {
        self.allow_noncommuting = true;
        self
    }

    pub fn commute_tol(mut self, tol: f64) -> Self {
        self.commute_tol = Some(tol);
        self
    }

    pub fn build(self) -> Result<Arrangement> {
        let ms = self.measurements;
        if ms.is_empty() {
            return Err(Error::InvalidParameter("an arrangement needs at least one measurement".into()));
        }
        let dim = ms[0].operator.dim();
        for m in ms.iter().chain(self.target.iter()) {
            if m.operator.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.operator.dim() });
            }
        }
        if let Some(b) = &self.background {
            if b.hamiltonian.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.hamiltonian.dim() });
            }
        }
        let labels: Vec<String> = ms.iter().map(|m| m.label.clone()).collect();
        let mut scalars = self.scalars;
        let hbar = self.background.as_ref().map_or(1.0, |b| b.hbar);
        scalars.entry(Symbol::from(HBAR)).or_insert(hbar);
        let alg = Algebra::builder()
            .observables(labels.iter().map(String::as_str))
            .scalars(scalars.keys().filter(|s| s.as_str() != HBAR).cloned())
            .build()?;
        let combining = match (self.combine_text, self.combine_poly) {
            (Some(t), _) => alg.parse_classical(&t).map_err(|e| match e {
                Error::UnknownSymbol(s) => Error::UnknownLabel(s),
                e => e,
            })?,
            (None, Some(p)) => p,
            (None, None) => return Err(Error::InvalidParameter("no combining function given".into())),
        };
        let combiner = Combiner::compile(&combining, &labels, &scalars)?;
        let tol = self.commute_tol.unwrap_or(COMMUTE_TOL);
        let copies = match self.copies {
            None => assign_copies(&ms, tol)?,
            Some(c) => {
                if c.len() != ms.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} copy indices given for {} measurements",
                        c.len(),
                        ms.len()
                    )));
                }
                for i in 0..ms.len() {
                    for j in i + 1..ms.len() {
                        if c[i] == c[j] && !self.allow_noncommuting && !commute(&ms[i].operator, &ms[j].operator, tol)? {
                            return Err(Error::AvcpViolation(format!(
                                "`{}` and `{}` do not commute but share copy {}",
                                ms[i].label, ms[j].label, c[i]
                            )));
                        }
                    }
                }
                c
            }
        };
        Ok(Arrangement {
            measurements: ms,
            copies,
            target: self.target,
            combining,
            combiner,
            background: self.background,
            commute_tol: tol,
            dim,
        })
    }
}

impl Arrangement {
    pub fn builder() -> ArrangementBuilder {
        ArrangementBuilder::default()
    }

    pub fn measurements(&self) -> &[MeasurementDecl] {
        &self.measurements
    }

    pub fn labels(&self) -> Vec<&str> {
        self.measurements.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn copy_of(&self, label: &str) -> Option<usize> {
        self.measurements.iter().position(|m| m.label == label).map(|i| self.copies[i])
    }

    pub fn copies(&self) -> &[usize] {
        &self.copies
    }

    pub fn copy_count(&self) -> usize {
        self.copies.iter().max().map_or(0, |m| m + 1)
    }

    /// Measurement indices on each copy, in declaration order.
    pub fn copy_groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.copy_count()];
        for (i, &c) in self.copies.iter().enumerate() {
            g[c].push(i);
        }
        g.retain(|m| !m.is_empty());
        g
    }

    pub fn target(&self) -> Option<&MeasurementDecl> {
        self.target.as_ref()
    }

    pub fn combining(&self) -> &ClassicalPoly {
        &self.combining
    }

    pub(crate) fn combiner(&self) -> &Combiner {
        &self.combiner
    }

    pub fn background(&self) -> Option<&Background> {
        self.background.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// State of every copy at `t1`.
    pub fn state_at_t1(&self, v0: &StateVector) -> Result<StateVector> {
        match &self.background {
            Some(b) => b.evolve(v0, b.t1),
            None => Ok(v0.clone()),
        }
    }

    /// State of every copy at `t2`.
    pub fn state_at_t2(&self, v0: &StateVector) -> Result<StateVector> {
        match &self.background {
            Some(b) => b.evolve(v0, b.t2),
            None => Ok(v0.clone()),
        }
    }

    /// Violations of the copy rules: commuting measurements on the same
    /// subsystem split across copies, and noncommuting measurements sharing
    /// a copy. Empty when the arrangement follows both rules.
    pub fn conformance(&self) -> Result<Vec<String>> {
        let ms = &self.measurements;
        let mut out = Vec::new();
        for i in 0..ms.len() {
            for j in i + 1..ms.len() {
                let commuting = commute(&ms[i].operator, &ms[j].operator, self.commute_tol)?;
                let (a, b) = (&ms[i].label, &ms[j].label);
                let (ci, cj) = (self.copies[i], self.copies[j]);
                if ci != cj && commuting && ms[i].subsystem == ms[j].subsystem {
                    out.push(format!("`{a}` and `{b}` commute but are on copies {ci} and {cj}"));
                } else if ci == cj && !commuting {
                    out.push(format!("`{a}` and `{b}` do not commute but share copy {ci}"));
                }
            }
        }
        Ok(out)
    }
}

/// Initial states for "for all v0" checks: `n_haar` Haar samples, the
/// computational basis, and the eigenbases of the given operators.
pub fn coverage_states<R: Rng + ?Sized>(
    operators: &[&HermitianOperator],
    dim: usize,
    n_haar: usize,
    rng: &mut R,
) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = (0..n_haar).map(|_| haar_state(dim, rng)).collect();
    out.extend((0..dim).map(|i| StateVector::basis(dim, i)));
    for a in operators {
        let s = a.spectrum()?;
        out.extend((0..s.dim()).map(|i| s.eigenvector(i)));
    }
    Ok(out)
}

/// Number of nonzero Schmidt coefficients of `v` viewed as a state of a
/// `d1 x d2` bipartite system.
pub fn schmidt_rank(v: &StateVector, d1: usize, d2: usize, tol: f64) -> Result<usize> {
    crate::opcore::check_dim(d1 * d2, v.dim())?;
    let m = ComplexMatrix::from_fn(d1, d2, |i, j| v.amplitudes()[i * d2 + j]);
    Ok(m.singular_values().iter().filter(|&&s| s > tol).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::tensor;

    fn sz() -> HermitianOperator {
        HermitianOperator::pauli_z()
    }

    #[test]
    fn copy_assignment_examples() {
        let z2 = HermitianOperator::new(sz().matrix() * sz().matrix()).unwrap();
        let a = Arrangement::builder().measure("a", sz()).measure("b", z2).combine("a + b").build().unwrap();
        assert_eq!(a.copy_count(), 1);
        let a = Arrangement::builder()
            .measure("a", HermitianOperator::pauli_x())
            .measure("b", sz())
            .combine("a + b")
            .build()
            .unwrap();
        assert_eq!(a.copies(), &[0, 1]);
        let i2 = HermitianOperator::identity(2);
        let a = Arrangement::builder()
            .measure_on("a", tensor(&HermitianOperator::pauli_x(), &i2), 0)
            .measure_on("b", tensor(&i2, &sz()), 1)
            .combine("a*b")
            .build()
            .unwrap();
        assert_eq!(a.copy_count(), 1);
        assert!(a.conformance().unwrap().is_empty());
    }

    #[test]
    fn greedy_reuses_earliest_compatible_copy() {
        let x = HermitianOperator::pauli_x();
        let a = Arrangement::builder()
            .measure("a", x.clone())
            .measure("b", sz())
            .measure("c", x)
            .measure("d", sz())
            .combine("a + b + c + d")
            .build()
            .unwrap();
        assert_eq!(a.copies(), &[0, 1, 0, 1]);
        assert_eq!(a.copy_groups(), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn explicit_copies_are_checked() {
        let err = Arrangement::builder()
            .measure("a", HermitianOperator::pauli_x())
            .measure("b", sz())
            .copies(vec![0, 0])
            .combine("a*b")
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::AvcpViolation(_)));
        let naive = Arrangement::builder()
            .measure("a", HermitianOperator::pauli_x())
            .measure("b", sz())
            .copies(vec![0, 0])
            .sequential_noncommuting()
            .combine("a + b")
            .build()
            .unwrap();
        assert_eq!(naive.conformance().unwrap().len(), 1);
        let split = Arrangement::builder().measure("a", sz()).measure("a2", sz()).copies(vec![0, 1]).combine("a*a2").build().unwrap();
        assert_eq!(split.conformance().unwrap().len(), 1);
    }

    #[test]
    fn labels_are_validated() {
        let err = Arrangement::builder().measure("a", sz()).combine("a + b").build().unwrap_err();
        assert_eq!(err, Error::UnknownLabel("b".into()));
        let err = Arrangement::builder().measure("a", sz()).measure("a", sz()).combine("a").build().unwrap_err();
        assert!(matches!(err, Error::DuplicateSymbol(_)));
        let err = Arrangement::builder().measure("a", sz()).combine("i*a").build().unwrap_err();
        assert!(matches!(err, Error::NotReal(_)));
        let err = Arrangement::builder().measure("a", sz()).measure("b", HermitianOperator::identity(3)).combine("a").build();
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn schmidt_rank_detects_entanglement() {
        let s = 0.5f64.sqrt();
        let bell = StateVector::from_reals(&[s, 0.0, 0.0, s]).unwrap();
        assert_eq!(schmidt_rank(&bell, 2, 2, 1e-10).unwrap(), 2);
        let prod = StateVector::from_reals(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(schmidt_rank(&prod, 2, 2, 1e-10).unwrap(), 1);
    }
}
