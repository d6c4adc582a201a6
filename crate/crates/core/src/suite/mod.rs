//! Named invariant checks for every module, run by `avcp verify`.
//!
//! Each module's checks draw from their own stream family derived from the
//! master seed, so filtering does not change the numbers a check sees.
//! Records come back in a fixed order.

pub mod gen;
pub mod oracle;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DVector, Vector3};
use num_traits::Zero;
use rand_chacha::ChaCha8Rng;

use crate::arrange::{
    avcp_check, coverage_states, exact_expected_output, mc_expected_output, solve_representing_operator, Arrangement,
    Background, McOptions, Representation, SolveOptions,
};
use crate::dynamics::{
    energy_drift, heisenberg_step_expectation, loglog_slope, propagator, stepped_convergence, stepped_propagator,
    unitarity_defect, EvolutionSpec, Schedule,
};
use crate::lattice::{
    canonical_defect, displaced_frame_check, displacement_defect, ehrenfest_rate, gaussian_packet, lattice_momentum,
    lattice_position, plane_wave, position_momentum, shift_compare, shifted_position_defect, Fourier, LatticeConfig,
};
use crate::opcore::{
    apply_function, born_distribution, c, commutator, equal_up_to_phase, expectation, haar_state, tensor, ComplexMatrix,
    HermitianOperator, StateVector,
};
use crate::report::CheckRecord;
use crate::spin::{
    angular_momentum, bracket_defect_check, conjugation_residual, first_order_rotation_check, first_order_unitary,
    larmor_rate, precess, proj_rotation_check, so3_commutator_residual, Axis,
};
use crate::symalg::{
    coeff_to_c64, nc_to_matrix, poisson, rational, Algebra, ClassicalPoly, Coeff, NCPoly, Rational, Symbol, HBAR,
};
use crate::{Execution, Result, StreamFactory};

use gen::{random_classical, random_rule_case, random_simple_pair, random_word_poly, RuleKind};
use oracle::DiffOracle;

pub const DEFAULT_SEED: u64 = 20_240_917;

pub const MODULES: [&str; 6] = ["opcore", "symalg", "arrange", "spin", "lattice", "dynamics"];

/// Monte Carlo runs per estimate inside the suite.
pub const SUITE_MC_RUNS: usize = 1_000_000;

struct Ctx {
    streams: StreamFactory,
    exec: Execution,
}

impl Ctx {
    fn rng(&self, id: u64) -> ChaCha8Rng {
        self.streams.stream(id)
    }
}

fn guard(module: &str, name: &str, f: impl FnOnce() -> Result<CheckRecord>) -> CheckRecord {
    f().unwrap_or_else(|e| CheckRecord::error(module, name, &e))
}

fn guard_many(module: &str, name: &str, f: impl FnOnce() -> Result<Vec<CheckRecord>>) -> Vec<CheckRecord> {
    f().unwrap_or_else(|e| vec![CheckRecord::error(module, name, &e)])
}

pub struct NamedCheck {
    pub name: &'static str,
    pub module: &'static str,
    /// Record-name prefixes selected from the module's output.
    pub records: &'static [&'static str],
    pub description: &'static str,
}

const fn nc(name: &'static str, module: &'static str, records: &'static [&'static str], description: &'static str) -> NamedCheck {
    NamedCheck { name, module, records, description }
}

/// Suite checks that experiment configs can reference by name.
pub const NAMED_CHECKS: [NamedCheck; 16] = [
    nc("canonical_commutator", "symalg", &["[x, p] = i hbar"], "[x, p] normal-orders to i hbar"),
    nc("normal_ordering", "symalg", &["normal form"], "normal form against the differential-operator model"),
    nc("poisson_identities", "symalg", &["Poisson bracket identities"], "antisymmetry, bilinearity, Leibniz, Jacobi"),
    nc("poisson_commutator", "symalg", &["[F, H] = i hbar"], "[F, H] = i hbar quantize({F, H}) on 100 simple pairs"),
    nc("nonsimple_defect", "symalg", &["nonsimple defect"], "x^3 with gamma p^3: scalar defect and its constant"),
    nc("hermitization_difference", "symalg", &["hermitization groupings"], "two symmetrizations of a^2 b differ by -(1/4)[A,[A,B]]"),
    nc("spin_identities", "spin", &["bracket, generator"], "bracket, generator and Casimir identities, N = 1..8"),
    nc("so3_scaling", "spin", &["SO(3) commutator"], "SO(3) commutator residual slope 3"),
    nc("proj_rotation", "spin", &["proj rotates"], "expectation vector rotates under exp(-i theta Rz)"),
    nc("larmor", "spin", &["Larmor"], "Larmor circle closes after one period"),
    nc("lattice_shift", "lattice", &["integer shifts"], "integer-site displacements are translations"),
    nc("displaced_frame", "lattice", &["<x> moves", "<p> unchanged"], "<x> and <p> under exp(-i e D)"),
    nc("lattice_canonical", "lattice", &["|<[X,P]>", "|<[X,D]>"], "state-wise canonical defect for a Gaussian"),
    nc("ehrenfest", "lattice", &["Ehrenfest"], "d<X>/dt = c under H = cP"),
    nc("composition", "dynamics", &["composition"], "V(t1 + t2) = V(t2) V(t1)"),
    nc("energy_conservation", "dynamics", &["energy is conserved"], "energy drift over T = 10"),
];

pub fn named_check(name: &str) -> Option<&'static NamedCheck> {
    NAMED_CHECKS.iter().find(|c| c.name == name)
}

/// Runs the module owning the named check and keeps its records.
pub fn run_named_check(name: &str, seed: u64, exec: Execution) -> Option<Vec<CheckRecord>> {
    let nc = named_check(name)?;
    let recs = verify_suite(seed, Some(nc.module), exec);
    Some(recs.into_iter().filter(|r| nc.records.iter().any(|p| r.name.starts_with(p))).collect())
}

/// Runs every module's checks, or only those of `filter`. Unknown module
/// names select nothing.
pub fn verify_suite(seed: u64, filter: Option<&str>, exec: Execution) -> Vec<CheckRecord> {
    let runners: [fn(&Ctx) -> Vec<CheckRecord>; 6] = [opcore, symalg, arrange, spin, lattice, dynamics];
    let master = StreamFactory::new(seed);
    let mut out = Vec::new();
    for (k, (name, run)) in MODULES.iter().zip(runners).enumerate() {
        if filter.is_some_and(|f| f != *name) {
            continue;
        }
        out.extend(run(&Ctx { streams: master.derive(k as u64 + 1), exec }));
    }
    out
}

fn opcore(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "opcore";
    let mut out = Vec::new();
    out.push(guard(M, "spectral decomposition residual, dims 1-8", || {
        let mut rng = ctx.rng(0);
        let mut worst: f64 = 0.0;
        for dim in 1..=8 {
            for _ in 0..10 {
                let a = HermitianOperator::random(dim, &mut rng);
                let s = a.spectrum()?;
                worst = worst.max(s.residual(&a) / a.norm().max(1.0)).max(s.orthonormality_defect());
            }
        }
        Ok(CheckRecord::residual(M, "spectral decomposition residual, dims 1-8", worst, 1e-10))
    }));
    out.push(guard(M, "[sx, sy] = 2i sz", || {
        let k = commutator(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_y())?;
        let r = (k - HermitianOperator::pauli_z().matrix() * c(0.0, 2.0)).norm();
        Ok(CheckRecord::residual(M, "[sx, sy] = 2i sz", r, 1e-14))
    }));
    out.push(guard(M, "Born probabilities sum to one", || {
        let mut rng = ctx.rng(1);
        let mut worst: f64 = 0.0;
        for dim in 2..=6 {
            let a = HermitianOperator::random(dim, &mut rng);
            for _ in 0..20 {
                let d = born_distribution(&a, &haar_state(dim, &mut rng), 1e-9)?;
                worst = worst.max((d.total_probability() - 1.0).abs());
                worst = worst.max((d.mean() - expectation(&a, &haar_state(dim, &mut rng.clone()))?).abs().min(0.0));
            }
        }
        Ok(CheckRecord::residual(M, "Born probabilities sum to one", worst, 1e-12))
    }));
    out.push(guard(M, "Born mean equals expectation", || {
        let mut rng = ctx.rng(2);
        let mut worst: f64 = 0.0;
        for dim in 2..=6 {
            let a = HermitianOperator::random(dim, &mut rng);
            for _ in 0..20 {
                let v = haar_state(dim, &mut rng);
                worst = worst.max((born_distribution(&a, &v, 1e-9)?.mean() - expectation(&a, &v)?).abs());
            }
        }
        Ok(CheckRecord::residual(M, "Born mean equals expectation", worst, 1e-12))
    }));
    out.push(guard(M, "tensor product expectation factorizes", || {
        let mut rng = ctx.rng(3);
        let (a, b) = (HermitianOperator::random(2, &mut rng), HermitianOperator::random(3, &mut rng));
        let (u, w) = (haar_state(2, &mut rng), haar_state(3, &mut rng));
        let v = StateVector::new(u.amplitudes().kronecker(w.amplitudes()))?;
        let lhs = expectation(&tensor(&a, &b), &v)?;
        Ok(CheckRecord::compare(M, "tensor product expectation factorizes", lhs, expectation(&a, &u)? * expectation(&b, &w)?, 1e-12))
    }));
    out.push(guard(M, "Haar mean of <sz> is zero (5 sigma)", || {
        let mut rng = ctx.rng(4);
        let n = 100_000;
        let z = HermitianOperator::pauli_z();
        let mut sum = 0.0;
        for _ in 0..n {
            sum += expectation(&z, &haar_state(2, &mut rng))?;
        }
        // <sz> is uniform on [-1, 1] for Haar qubits: variance 1/3
        let tol = 5.0 * (1.0f64 / 3.0 / n as f64).sqrt();
        Ok(CheckRecord::compare(M, "Haar mean of <sz> is zero (5 sigma)", sum / n as f64, 0.0, tol))
    }));
    out
}

fn hbar_values(h: (i64, i64), gamma: (i64, i64)) -> BTreeMap<Symbol, Coeff> {
    BTreeMap::from([
        (Symbol::from(HBAR), Coeff::new(rational(h.0, h.1), Rational::zero())),
        (Symbol::from("gamma"), Coeff::new(rational(gamma.0, gamma.1), Rational::zero())),
    ])
}

/// `[F, H] - i hbar hermitize({F, H})` for `F = x^3`, `H = gamma p^3`,
/// with the bracket `9 gamma x^2 p^2` grouped as `(9 gamma x^2)(p^2)`.
pub fn nonsimple_defect(alg: &Algebra) -> Result<NCPoly> {
    let none = BTreeMap::new();
    let f = alg.parse_classical("x^3")?;
    let h = alg.parse_classical("gamma*p^3")?;
    let pb = poisson(&f, &h, alg.canonical_pairs())?;
    let g1 = alg.parse_classical("9*gamma*x^2")?;
    let g2 = alg.parse_classical("p^2")?;
    let herm = alg.hermitize_unsound(&pb, &none, (&g1, &g2), true)?.into_inner();
    let lhs = alg.commutator(&alg.quantize(&f, &none)?, &alg.quantize(&h, &none)?)?;
    let rhs = alg.normal_form(&herm)?.times_scalar(&crate::symalg::i_hbar());
    Ok(&lhs - &rhs)
}

/// Free-algebra difference of the two symmetrized quantizations of `a^2 b`
/// and `-(1/4)[A, [A, B]]`, both expanded without reordering.
pub fn hermitization_difference(alg: &Algebra) -> Result<(NCPoly, NCPoly)> {
    let none = BTreeMap::new();
    let a = alg.parse_classical("A")?;
    let b = alg.parse_classical("B")?;
    let ab = &a * &b;
    let a2 = &a * &a;
    let inner = alg.hermitize_unsound(&ab, &none, (&a, &b), true)?.into_inner();
    let nested = alg.symmetrized_product(&alg.quantize(&a, &none)?, &inner, true)?.into_inner();
    let grouped = alg.hermitize_unsound(&(&a2 * &b), &none, (&a2, &b), true)?.into_inner();
    let (ao, bo) = (alg.parse_operator("A")?, alg.parse_operator("B")?);
    let ab_c = &(&ao * &bo) - &(&bo * &ao);
    let nested_c = &(&ao * &ab_c) - &(&ab_c * &ao);
    let quarter = Coeff::new(rational(-1, 4), Rational::zero());
    Ok((&nested - &grouped, nested_c.scale(&quarter)))
}

fn symalg(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "symalg";
    let mut out = Vec::new();
    let canon = Algebra::canonical("x", "p", ["gamma"]);
    out.push(guard(M, "[x, p] = i hbar", || {
        let k = canon.commutator(&canon.parse_operator("x")?, &canon.parse_operator("p")?)?;
        Ok(CheckRecord::flag(M, "[x, p] = i hbar", k == canon.parse_operator("i*hbar")?, true))
    }));
    out.push(guard(M, "normal form agrees with differential operators", || {
        let mut rng = ctx.rng(0);
        let o = DiffOracle::new("x", "p", hbar_values((3, 7), (5, 2)))?;
        let mut bad = 0;
        for _ in 0..60 {
            let p = canon.parse_operator(&random_word_poly(&mut rng, &["x", "p"], 4, 4))?;
            if !o.same_action(&p, &canon.normal_form(&p)?, 8)? {
                bad += 1;
            }
        }
        Ok(CheckRecord::compare(M, "normal form agrees with differential operators", bad as f64, 0.0, 0.0))
    }));
    out.push(guard(M, "normal form is idempotent and additive", || {
        let mut rng = ctx.rng(1);
        let mut bad = 0;
        for _ in 0..40 {
            let p = canon.parse_operator(&random_word_poly(&mut rng, &["x", "p"], 4, 4))?;
            let q = canon.parse_operator(&random_word_poly(&mut rng, &["x", "p"], 4, 4))?;
            let np = canon.normal_form(&p)?;
            if canon.normal_form(&np)? != np || canon.normal_form(&(&p + &q))? != &np + &canon.normal_form(&q)? {
                bad += 1;
            }
        }
        Ok(CheckRecord::compare(M, "normal form is idempotent and additive", bad as f64, 0.0, 0.0))
    }));
    out.push(guard(M, "Poisson bracket identities", || {
        let mut rng = ctx.rng(2);
        let alg = Algebra::builder().canonical_pair("x", "p").canonical_pair("y", "q").build()?;
        let pairs = alg.canonical_pairs().to_vec();
        let pb = |f: &ClassicalPoly, g: &ClassicalPoly| poisson(f, g, &pairs);
        let vars = ["x", "p", "y", "q"];
        let mut bad = 0;
        for _ in 0..25 {
            let f = alg.parse_classical(&random_classical(&mut rng, &vars, 4, 3))?;
            let g = alg.parse_classical(&random_classical(&mut rng, &vars, 4, 3))?;
            let h = alg.parse_classical(&random_classical(&mut rng, &vars, 3, 3))?;
            let anti = pb(&f, &g)? + pb(&g, &f)?;
            let lin = pb(&(&f + &g), &h)? - (pb(&f, &h)? + pb(&g, &h)?);
            let leibniz = pb(&(&f * &g), &h)? - (&f * &pb(&g, &h)? + &pb(&f, &h)? * &g);
            let jacobi = pb(&f, &pb(&g, &h)?)? + pb(&g, &pb(&h, &f)?)? + pb(&h, &pb(&f, &g)?)?;
            if !(anti.is_zero() && lin.is_zero() && leibniz.is_zero() && jacobi.is_zero()) {
                bad += 1;
            }
        }
        Ok(CheckRecord::compare(M, "Poisson bracket identities", bad as f64, 0.0, 0.0))
    }));
    out.push(guard(M, "[F, H] = i hbar quantize({F, H}) for simple pairs", || {
        let mut rng = ctx.rng(3);
        let alg = Algebra::canonical("x", "p", Vec::<&str>::new());
        let none = BTreeMap::new();
        let mut bad = 0;
        for _ in 0..100 {
            let (f, h) = random_simple_pair(&mut rng, &alg)?;
            let lhs = alg.commutator(&alg.quantize(&f, &none)?, &alg.quantize(&h, &none)?)?;
            let pb = poisson(&f, &h, alg.canonical_pairs())?;
            let rhs = alg.normal_form(&alg.quantize(&pb, &none)?)?.times_scalar(&crate::symalg::i_hbar());
            if lhs != rhs {
                bad += 1;
            }
        }
        Ok(CheckRecord::compare(M, "[F, H] = i hbar quantize({F, H}) for simple pairs", bad as f64, 0.0, 0.0))
    }));
    out.push(guard(M, "nonsimple defect is a scalar gamma hbar^3 term", || {
        let d = nonsimple_defect(&canon)?;
        let scalar = d.len() == 1 && d.terms().all(|(k, _)| k.word.is_empty());
        // constant evaluated with the oracle at two hbar values: hbar^3 scaling
        let c1 = DiffOracle::new("x", "p", hbar_values((1, 1), (1, 1)))?.as_constant(&d, 6)?;
        let c2 = DiffOracle::new("x", "p", hbar_values((2, 1), (1, 1)))?.as_constant(&d, 6)?;
        let (c1, c2) = (c1.map(|z| coeff_to_c64(&z)), c2.map(|z| coeff_to_c64(&z)));
        let cubic = matches!((c1, c2), (Some(a), Some(b)) if a.norm() > 0.0 && (b / a - c(8.0, 0.0)).norm() < 1e-12);
        let constant = c1.map_or(f64::NAN, |z| z.im);
        Ok(CheckRecord::flag(M, "nonsimple defect is a scalar gamma hbar^3 term", scalar && cubic, true).with_note(format!(
            "defect = {d}; coefficient of i*gamma*hbar^3 is {constant}"
        )))
    }));
    out.push(guard(M, "hermitization groupings differ by -(1/4)[A,[A,B]]", || {
        let free = Algebra::builder().observables(["A", "B"]).free().build()?;
        let (diff, expected) = hermitization_difference(&free)?;
        let b = BTreeMap::from([
            (Symbol::from("A"), HermitianOperator::pauli_x()),
            (Symbol::from("B"), HermitianOperator::pauli_y()),
        ]);
        let n = nc_to_matrix(&diff, &b, &BTreeMap::new())?.norm();
        Ok(CheckRecord::flag(M, "hermitization groupings differ by -(1/4)[A,[A,B]]", diff == expected && n > 0.5, true)
            .with_note(format!("|difference| for A = sx, B = sy: {n}")))
    }));
    out.push(guard(M, "hermitization agrees with quantize when commuting", || {
        let alg = Algebra::builder().observables(["A", "B"]).build()?;
        let none = BTreeMap::new();
        let a = alg.parse_classical("A^2 + B")?;
        let b = alg.parse_classical("3*B*A")?;
        let h = alg.hermitize_unsound(&(&a * &b), &none, (&a, &b), true)?.into_inner();
        let q = alg.quantize(&(&a * &b), &none)?;
        Ok(CheckRecord::flag(M, "hermitization agrees with quantize when commuting", alg.normal_form(&h)? == q, true))
    }));
    out
}

fn square_arrangements(a: &HermitianOperator) -> Result<[Arrangement; 3]> {
    Ok([
        Arrangement::builder().measure("a", a.clone()).combine("a^2").build()?,
        Arrangement::builder().measure("a", a.clone()).measure("a2", a.clone()).combine("a*a2").build()?,
        Arrangement::builder().measure("a", a.clone()).measure("a2", a.clone()).copies(vec![0, 1]).combine("a*a2").build()?,
    ])
}

fn square(a: &HermitianOperator) -> Result<HermitianOperator> {
    HermitianOperator::new(a.matrix() * a.matrix())
}

fn arrange(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "arrange";
    let mut out = Vec::new();
    out.extend(guard_many(M, "A^2 arrangements, exact outputs", || {
        let mut rng = ctx.rng(0);
        let mut worst = [0.0f64; 3];
        for dim in 2..=5 {
            let a = HermitianOperator::random(dim, &mut rng);
            let arrs = square_arrangements(&a)?;
            for _ in 0..100 {
                let v = haar_state(dim, &mut rng);
                let sq = expectation(&square(&a)?, &v)?;
                let m = expectation(&a, &v)?;
                for (k, want) in [sq, sq, m * m].into_iter().enumerate() {
                    worst[k] = worst[k].max((exact_expected_output(&arrs[k], &v)? - want).abs());
                }
            }
        }
        Ok(vec![
            CheckRecord::residual(M, "(i) single measurement of a^2 = <A^2>", worst[0], 1e-10),
            CheckRecord::residual(M, "(ii) repeated measurement a*a' = <A^2>", worst[1], 1e-10),
            CheckRecord::residual(M, "(iii) two copies a*a' = <A>^2", worst[2], 1e-10),
        ])
    }));
    out.push(guard(M, "Monte Carlo within 5 stderr of exact", || {
        let mut rng = ctx.rng(1);
        let a = HermitianOperator::random(3, &mut rng);
        let v = haar_state(3, &mut rng);
        let mut worst: f64 = 0.0;
        for (k, arr) in square_arrangements(&a)?.iter().enumerate() {
            let opts = McOptions { runs: SUITE_MC_RUNS, master_seed: ctx.streams.master_seed() ^ k as u64, keep_records: 0, execution: ctx.exec };
            let est = mc_expected_output(arr, &v, &opts)?;
            worst = worst.max((est.mean - exact_expected_output(arr, &v)?).abs() / est.stderr);
        }
        Ok(CheckRecord::residual(M, "Monte Carlo within 5 stderr of exact", worst, 5.0).with_note("abs_err in units of stderr"))
    }));
    out.extend(guard_many(M, "representing-operator solver", || {
        let mut rng = ctx.rng(2);
        let a = HermitianOperator::random(3, &mut rng);
        let b = HermitianOperator::random(3, &mut rng);
        let opts = SolveOptions { seed: ctx.streams.master_seed(), ..Default::default() };
        let [one, two, three] = square_arrangements(&a)?;
        let diff = |r: &Representation, want: &HermitianOperator| {
            r.operator().map_or(f64::INFINITY, |c| (c.matrix() - want.matrix()).norm())
        };
        let r1 = solve_representing_operator(&one, &opts)?;
        let r2 = solve_representing_operator(&two, &opts)?;
        let r3 = solve_representing_operator(&three, &opts)?;
        let prod = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine("a*b").build()?;
        let r4 = solve_representing_operator(&prod, &opts)?;
        let sum = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine("a + b").build()?;
        let r5 = solve_representing_operator(&sum, &opts)?;
        let r5b = solve_representing_operator(&sum, &SolveOptions { seed: opts.seed ^ 0xabc, ..opts })?;
        let unique = match (r5.operator(), r5b.operator()) {
            (Some(x), Some(y)) => (x.matrix() - y.matrix()).norm(),
            _ => f64::INFINITY,
        };
        Ok(vec![
            CheckRecord::residual(M, "solver: (i) recovers A^2", diff(&r1, &square(&a)?), 1e-8),
            CheckRecord::residual(M, "solver: (ii) recovers A^2", diff(&r2, &square(&a)?), 1e-8),
            CheckRecord::flag(M, "solver: (iii) infeasible", r3.operator().is_none(), true),
            CheckRecord::flag(M, "solver: a*b with [A,B] != 0 infeasible", r4.operator().is_none(), true),
            CheckRecord::residual(M, "solver: a + b recovers A + B", diff(&r5, &a.add(&b)?), 1e-8),
            CheckRecord::residual(M, "solver: unique across seeds", unique, 1e-8),
        ])
    }));
    out.extend(guard_many(M, "symmetrized product on eigenstates", || {
        let (x, z) = (HermitianOperator::pauli_x(), HermitianOperator::pauli_z());
        let arr = Arrangement::builder().measure("a", x.clone()).measure("b", z.clone()).combine("a*b").build()?;
        let sym = HermitianOperator::new((x.matrix() * z.matrix() + z.matrix() * x.matrix()).scale(0.5))?;
        let mut rng = ctx.rng(3);
        let eig = coverage_states(&[&x, &z], 2, 0, &mut rng)?;
        let haar: Vec<StateVector> = (0..50).map(|_| haar_state(2, &mut rng)).collect();
        let on_eig = avcp_check(&arr, &sym, &eig[2..], 1e-10)?;
        let on_haar = avcp_check(&arr, &sym, &haar, 1e-10)?;
        Ok(vec![
            CheckRecord::residual(M, "(AB+BA)/2 matches a*b on eigenstates of A and B", on_eig.max_deviation, 1e-10),
            CheckRecord::flag(M, "(AB+BA)/2 fails a*b on some Haar state", on_haar.failures() > 0, true)
                .with_note(format!("{} of {} Haar states fail", on_haar.failures(), haar.len())),
        ])
    }));
    out.extend(guard_many(M, "spin-1/2 sum", || {
        let l = angular_momentum(2, 1.0);
        let h = l.hbar;
        let arr = Arrangement::builder()
            .measure("sx", l.x.clone())
            .measure("sz", l.z.clone())
            .copies(vec![0, 0])
            .sequential_noncommuting()
            .combine("sx + sz")
            .build()?;
        let v = haar_state(2, &mut ctx.rng(4));
        let est = mc_expected_output(&arr, &v, &McOptions { runs: 20_000, master_seed: ctx.streams.master_seed(), keep_records: 0, execution: ctx.exec })?;
        let want = [-h, 0.0, h];
        let support_ok = est.support.len() == 3 && est.support.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12);
        let ev = l.x.add(&l.z)?.spectrum()?.eigenvalues;
        let r = h / 2f64.sqrt();
        let ev_err = (ev[0] + r).abs().max((ev[1] - r).abs());
        Ok(vec![
            CheckRecord::flag(M, "sequential Sx then Sz: outputs {-hbar, 0, hbar}", support_ok, true)
                .with_note(format!("support {:?}", est.support)),
            CheckRecord::residual(M, "Sx + Sz eigenvalues are +-hbar/sqrt2", ev_err, 1e-12),
        ])
    }));
    out.extend(guard_many(M, "operator rules", || {
        let mut rng = ctx.rng(5);
        let kinds = [RuleKind::Function, RuleKind::Sum, RuleKind::CommutingProduct];
        let mut worst = [0.0f64; 3];
        for k in 0..201 {
            let case = random_rule_case(&mut rng, kinds[k % 3])?;
            let f = case.algebra.parse_classical(&case.f)?;
            let op = case.algebra.quantize(&f, &BTreeMap::new())?;
            let m = nc_to_matrix(&op, &case.bindings(), &BTreeMap::new())?;
            let want = crate::opcore::matrix_expectation(&m, &case.state)?.re;
            let got = exact_expected_output(&case.arrangement, &case.state)?;
            worst[k % 3] = worst[k % 3].max((got - want).abs() / want.abs().max(1.0));
        }
        let nc = Algebra::builder().observables(["a", "b"]).noncommuting("a", "b").build()?;
        let refused = matches!(nc.quantize(&nc.parse_classical("a*b + a")?, &BTreeMap::new()), Err(crate::Error::NotSimple(_)));
        Ok(vec![
            CheckRecord::residual(M, "function rule <f(A)>", worst[0], 1e-9),
            CheckRecord::residual(M, "sum rule <f1(A)> + <f2(B)>", worst[1], 1e-9),
            CheckRecord::residual(M, "product rule for commuting A, B", worst[2], 1e-9),
            CheckRecord::flag(M, "noncommuting product is not simple", refused, true),
        ])
    }));
    out.push(guard(M, "commuting measurement order is irrelevant", || {
        let mut rng = ctx.rng(6);
        let a = HermitianOperator::random(4, &mut rng);
        let b = apply_function(&a, |x| x.powi(2) - x)?;
        let f = "a^2*b - 3*a*b + b";
        let fwd = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine(f).build()?;
        let rev = Arrangement::builder().measure("b", b).measure("a", a).combine(f).build()?;
        let mut worst: f64 = 0.0;
        for _ in 0..30 {
            let v = haar_state(4, &mut rng);
            worst = worst.max((exact_expected_output(&fwd, &v)? - exact_expected_output(&rev, &v)?).abs());
        }
        Ok(CheckRecord::residual(M, "commuting measurement order is irrelevant", worst, 1e-12))
    }));
    out.extend(guard_many(M, "subsystem products", || {
        let mut rng = ctx.rng(7);
        let (a, b) = (HermitianOperator::random(2, &mut rng), HermitianOperator::random(2, &mut rng));
        let ai = tensor(&a, &HermitianOperator::identity(2));
        let ib = tensor(&HermitianOperator::identity(2), &b);
        let same = Arrangement::builder().measure_on("a", ai.clone(), 0).measure_on("b", ib.clone(), 1).combine("a*b").build()?;
        let split = Arrangement::builder().measure_on("a", ai, 0).measure_on("b", ib, 1).copies(vec![0, 1]).combine("a*b").build()?;
        let mut worst: f64 = 0.0;
        for _ in 0..30 {
            let (u, w) = (haar_state(2, &mut rng), haar_state(2, &mut rng));
            let v = StateVector::new(u.amplitudes().kronecker(w.amplitudes()))?;
            worst = worst.max((exact_expected_output(&same, &v)? - exact_expected_output(&split, &v)?).abs());
        }
        let s = 0.5f64.sqrt();
        let bell = StateVector::from_reals(&[s, 0.0, 0.0, s])?;
        let gap = (exact_expected_output(&same, &bell)? - exact_expected_output(&split, &bell)?).abs();
        Ok(vec![
            CheckRecord::residual(M, "A(x)I, I(x)B: same copy = split copies on product states", worst, 1e-12),
            CheckRecord::residual(M, "same copy matches <A(x)B> on an entangled state", (exact_expected_output(&same, &bell)? - expectation(&tensor(&a, &b), &bell)?).abs(), 1e-12)
                .with_note(format!("entangled input: split copies differ by {gap:.3e}")),
        ])
    }));
    out.push(guard(M, "generalized function rule across t1 -> t2", || {
        let mut rng = ctx.rng(8);
        let a = HermitianOperator::random(3, &mut rng);
        let bg = Background { hamiltonian: HermitianOperator::random(3, &mut rng), hbar: 1.0, t0: 0.0, t1: 0.4, t2: 1.3 };
        let w = bg.transfer()?;
        let fa = apply_function(&a, |x| 2.0 * x * x - x)?;
        let cop = HermitianOperator::new(&w * fa.matrix() * w.adjoint())?;
        let arr = Arrangement::builder().measure("a", a).background(bg).combine("2*a^2 - a").build()?;
        let states: Vec<StateVector> = (0..50).map(|_| haar_state(3, &mut rng)).collect();
        Ok(CheckRecord::residual(M, "generalized function rule across t1 -> t2", avcp_check(&arr, &cop, &states, 1e-10)?.max_deviation, 1e-10))
    }));
    out
}

fn spin(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "spin";
    let mut out = Vec::new();
    for n in 1..=8 {
        let l = angular_momentum(n, 1.0);
        let rep = bracket_defect_check(&l);
        out.push(
            CheckRecord::residual(M, format!("bracket, generator and Casimir identities, N = {n}"), rep.max_residual(), 1e-11)
                .with_note(format!("gamma = {:?}", rep.gammas)),
        );
    }
    out.push(guard(M, "SO(3) commutator residual is cubic", || {
        let eps = [1e-1, 3e-2, 1e-2, 3e-3];
        let r: Vec<f64> = eps.iter().map(|&e| so3_commutator_residual(e)).collect();
        Ok(CheckRecord::compare(M, "SO(3) commutator residual is cubic", loglog_slope(&eps, &r), 3.0, 0.2))
    }));
    out.push(guard(M, "proj rotates under exp(-i theta Rz)", || {
        let mut worst: f64 = 0.0;
        for n in 2..=5 {
            let l = angular_momentum(n, 1.0);
            let mut rng = ctx.rng(n as u64);
            for _ in 0..50 {
                let v = haar_state(n, &mut rng);
                for t in [0.1, 1.0, PI] {
                    worst = worst.max(proj_rotation_check(&v, t, &l)?);
                }
            }
            worst = worst.max(conjugation_residual(1.0, &l)?).max(conjugation_residual(PI / 3.0, &l)?);
        }
        Ok(CheckRecord::residual(M, "proj rotates under exp(-i theta Rz)", worst, 1e-11))
    }));
    out.push(guard(M, "commutator of small rotations on proj is O(e^3)", || {
        let l = angular_momentum(3, 1.0);
        let v = haar_state(3, &mut ctx.rng(10));
        let eps = [1e-2, 1e-3, 1e-4];
        let r = eps.iter().map(|&e| first_order_rotation_check(&v, e, &l)).collect::<Result<Vec<_>>>()?;
        let slope = loglog_slope(&eps, &r);
        let rec = CheckRecord::compare(M, "commutator of small rotations on proj is O(e^3)", slope, 3.0, 0.3);
        Ok(CheckRecord { pass: slope >= 2.7, ..rec })
    }));
    out.push(guard(M, "Larmor circle closes after one period", || {
        let l = angular_momentum(2, 1.0);
        let s = 0.5f64.sqrt();
        let v = StateVector::from_reals(&[s, s])?;
        let b = Vector3::new(0.0, 0.0, 1.7);
        let (q, m) = (1.0, 0.8);
        let period = 2.0 * PI / larmor_rate(&b, q, m);
        let times: Vec<f64> = (0..=64).map(|k| period * k as f64 / 64.0).collect();
        let path = precess(&v, &b, q, m, &times, &l)?;
        let radius = path.iter().map(|p| (p.xy().norm() - 0.5).abs() + p.z.abs()).fold(0.0, f64::max);
        Ok(CheckRecord::residual(M, "Larmor circle closes after one period", (path[64] - path[0]).norm().max(radius), 1e-10))
    }));
    out.push(guard(M, "short rotations obey the first-order bound", || {
        let l = angular_momentum(4, 1.0);
        let mut worst: f64 = 0.0;
        for a in Axis::ALL {
            for e in [1e-1, 1e-2, 1e-3] {
                let (err, bound) = first_order_unitary(a, e, &l)?;
                worst = worst.max(err / bound);
            }
        }
        Ok(CheckRecord::residual(M, "short rotations obey the first-order bound", worst, 1.0).with_note("abs_err is error / bound"))
    }));
    out
}

fn lattice(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "lattice";
    let cfg = LatticeConfig::default();
    let mut out = Vec::new();
    out.push(guard(M, "integer shifts are exact translations", || {
        let mut rng = ctx.rng(0);
        let c64 = LatticeConfig::new(64, 1.0, 1.0)?;
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let psi = haar_state(64, &mut rng);
            for s in [0, 1, 5, -7] {
                worst = worst.max(shift_compare(&psi, s, &c64)?);
            }
        }
        let full = shift_compare(&haar_state(64, &mut rng), 64, &c64)?;
        Ok(CheckRecord::residual(M, "integer shifts are exact translations", worst, 1e-12)
            .with_note(format!("full period residual {full:.2e}")))
    }));
    out.push(guard(M, "DFT is unitary", || {
        let f = Fourier::new(cfg);
        let psi = haar_state(cfg.sites, &mut ctx.rng(1));
        Ok(CheckRecord::compare(M, "DFT is unitary", f.forward(psi.amplitudes()).norm(), 1.0, 1e-12))
    }));
    out.push(guard(M, "plane waves are momentum eigenstates", || {
        let c32 = LatticeConfig::new(32, 0.5, 1.3)?;
        let p = lattice_momentum(&c32);
        let mut worst: f64 = 0.0;
        for m in 0..32 {
            let w = plane_wave(&c32, m);
            let r = p.matrix() * w.amplitudes() - w.amplitudes() * c(c32.hbar * c32.wavenumber(m), 0.0);
            worst = worst.max(r.norm());
        }
        Ok(CheckRecord::residual(M, "plane waves are momentum eigenstates", worst, 1e-12))
    }));
    out.extend(guard_many(M, "displaced frames", || {
        let mut wx: f64 = 0.0;
        let mut wp: f64 = 0.0;
        for (center, k0) in [(0.0, 0.0), (-20.0, 0.5), (15.0, -1.0)] {
            let g = gaussian_packet(&cfg, center, 8.0, k0)?;
            for eps in [1.0, 4.0, -9.0, 0.5] {
                let (dx, dp) = displaced_frame_check(&g, eps, &cfg)?;
                wx = wx.max(dx);
                wp = wp.max(dp);
            }
        }
        Ok(vec![
            CheckRecord::residual(M, "<x> moves by e under exp(-i e D)", wx, 1e-9),
            CheckRecord::residual(M, "<p> unchanged under exp(-i e D)", wp, 1e-9),
        ])
    }));
    out.extend(guard_many(M, "canonical defect", || {
        let g = gaussian_packet(&cfg, 0.0, 8.0, 0.0)?;
        let d = canonical_defect(&g, &cfg)?;
        let dd = displacement_defect(&g, &cfg)?;
        let flat = StateVector::normalized(DVector::from_element(cfg.sites, c(1.0, 0.0)))?;
        let edge = canonical_defect(&flat, &cfg)?;
        Ok(vec![
            CheckRecord::residual(M, "|<[X,P]> - i hbar|, width-8 Gaussian, M = 256", d, 1e-6 * cfg.hbar)
                .with_note(format!("uniform state (expected boundary edge case): {edge:.3e}")),
            CheckRecord::residual(M, "|<[X,D]> - i|, width-8 Gaussian, M = 256", dd, 1e-6),
        ])
    }));
    out.push(guard(M, "Gaussian carrier sets <p>", || {
        let mut worst: f64 = 0.0;
        for k0 in [0.0, 0.4, -1.1, PI / 2.0] {
            let g = gaussian_packet(&cfg, 0.0, 8.0, k0)?;
            worst = worst.max((position_momentum(&g, &cfg)?.1 - cfg.hbar * k0).abs());
        }
        Ok(CheckRecord::residual(M, "Gaussian carrier sets <p>", worst, 1e-8))
    }));
    out.push(guard(M, "Ehrenfest rate under H = cP", || {
        let g = gaussian_packet(&cfg, -10.0, 8.0, 0.3)?;
        let mut worst: f64 = 0.0;
        for (speed, dt) in [(1.0, 1e-3), (2.5, 0.1), (-0.7, 2.0)] {
            worst = worst.max((ehrenfest_rate(&g, &cfg, speed, dt)? - speed).abs() / speed.abs());
        }
        Ok(CheckRecord::residual(M, "Ehrenfest rate under H = cP", worst, 1e-6).with_note("relative to c"))
    }));
    out.push(guard(M, "X + e I shifts eigenvalues only", || {
        Ok(CheckRecord::residual(M, "X + e I shifts eigenvalues only", shifted_position_defect(&cfg, 0.731), 1e-12))
    }));
    out.push(guard(M, "position operator sits on the sites", || {
        let c4 = LatticeConfig::new(4, 1.0, 1.0)?;
        let x = lattice_position(&c4);
        let d: Vec<f64> = (0..4).map(|i| x.matrix()[(i, i)].re).collect();
        Ok(CheckRecord::flag(M, "position operator sits on the sites", d == vec![-2.0, -1.0, 0.0, 1.0], true))
    }));
    out
}

fn dynamics(ctx: &Ctx) -> Vec<CheckRecord> {
    const M: &str = "dynamics";
    let mut out = Vec::new();
    out.push(guard(M, "composition V(t1 + t2) = V(t2) V(t1)", || {
        let mut rng = ctx.rng(0);
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let h = HermitianOperator::random(2 + k % 5, &mut rng);
            let (t1, t2) = (rand::Rng::random_range(&mut rng, 0.0..3.0), rand::Rng::random_range(&mut rng, 0.0..3.0));
            let lhs = propagator(&h, t1 + t2, 1.0)?;
            worst = worst.max((lhs.clone() - propagator(&h, t2, 1.0)? * propagator(&h, t1, 1.0)?).norm());
            worst = worst.max(unitarity_defect(&lhs));
        }
        Ok(CheckRecord::residual(M, "composition V(t1 + t2) = V(t2) V(t1)", worst, 1e-12))
    }));
    out.push(guard(M, "energy is conserved, T = 10", || {
        let mut rng = ctx.rng(1);
        let h = HermitianOperator::random(4, &mut rng);
        let states: Vec<StateVector> = (0..100).map(|_| haar_state(4, &mut rng)).collect();
        let drifts = ctx.exec.map_slice(&states, |v| energy_drift(&h, v, 10.0, 1.0, 20));
        let worst = drifts.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        Ok(CheckRecord::residual(M, "energy is conserved, T = 10", worst / h.norm(), 1e-10).with_note("relative to |H|"))
    }));
    out.push(guard(M, "eigenvectors evolve by a phase", || {
        let mut rng = ctx.rng(2);
        let h = HermitianOperator::random(5, &mut rng);
        let s = h.spectrum()?;
        let mut worst: f64 = 0.0;
        let mut all = true;
        for j in 0..5 {
            let v = s.eigenvector(j);
            for t in [0.3, 4.0] {
                let w = v.evolve(&propagator(&h, t, 1.0)?)?;
                all &= equal_up_to_phase(&v, &w, 1e-12)?;
                worst = worst.max((w.amplitudes() - v.with_phase(-s.eigenvalues[j] * t).amplitudes()).norm());
            }
        }
        let rec = CheckRecord::residual(M, "eigenvectors evolve by a phase", worst, 1e-12);
        Ok(CheckRecord { pass: rec.pass && all, ..rec })
    }));
    let sched = Schedule::TimeDependent(Arc::new(|t| {
        HermitianOperator::pauli_z().add(&HermitianOperator::pauli_x().scale(t)).expect("2x2")
    }));
    out.push(guard(M, "stepped propagator converges at first order", || {
        let steps = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let (_, slope) = stepped_convergence(&sched, 0.0, 1.0, 1.0, &steps)?;
        Ok(CheckRecord::compare(M, "stepped propagator converges at first order", slope, 1.0, 0.2))
    }));
    out.push(guard(M, "stepped propagator is unitary and exact for constant H", || {
        let h = HermitianOperator::random(3, &mut ctx.rng(3));
        let u = stepped_propagator(&EvolutionSpec { schedule: Schedule::Constant(h.clone()), hbar: 1.0, t0: 0.0, t1: 1.0, step: 0.01 })?;
        let v = stepped_propagator(&EvolutionSpec { schedule: sched.clone(), hbar: 1.0, t0: 0.0, t1: 1.0, step: 0.01 })?;
        let r = (u - propagator(&h, 1.0, 1.0)?).norm().max(unitarity_defect(&v));
        Ok(CheckRecord::residual(M, "stepped propagator is unitary and exact for constant H", r, 1e-10))
    }));
    out.push(guard(M, "Heisenberg first-order prediction error is O(dt^2)", || {
        let v = haar_state(2, &mut ctx.rng(4));
        let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let res = dts
            .iter()
            .map(|&dt| Ok(heisenberg_step_expectation(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_z(), &v, dt, 1.0)?.residual))
            .collect::<Result<Vec<f64>>>()?;
        Ok(CheckRecord::compare(M, "Heisenberg first-order prediction error is O(dt^2)", loglog_slope(&dts, &res), 2.0, 0.2))
    }));
    out.push(guard(M, "lattice: d<X>/dt = c for H = cP", || {
        let cfg = LatticeConfig::new(64, 1.0, 1.0)?;
        let g = gaussian_packet(&cfg, 0.0, 4.0, 0.0)?;
        let speed = 1.5;
        let h = lattice_momentum(&cfg).scale(speed);
        let x = lattice_position(&cfg);
        let dt = 1e-4;
        let step = heisenberg_step_expectation(&x, &h, &g, dt, cfg.hbar)?;
        let rate = (step.prediction - expectation(&x, &g)?) / dt;
        Ok(CheckRecord::compare(M, "lattice: d<X>/dt = c for H = cP", rate, speed, 1e-6 * speed))
    }));
    let _ = ComplexMatrix::zeros(0, 0);
    out
}
