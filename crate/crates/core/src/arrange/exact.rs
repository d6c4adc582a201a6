use crate::opcore::{check_dim, default_eig_tol, expectation, HermitianOperator, ProjectiveMeasurement, StateVector};
use crate::Result;

use super::Arrangement;

/// Joint outcomes of the measurements on one copy: probability and the
/// values, in the copy's declaration order.
fn copy_outcomes(ms: &[ProjectiveMeasurement], v: &StateVector) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut out = Vec::new();
    let mut values = Vec::with_capacity(ms.len());
    walk(ms, v, 1.0, &mut values, &mut out)?;
    Ok(out)
}

fn walk(
    ms: &[ProjectiveMeasurement],
    v: &StateVector,
    p: f64,
    values: &mut Vec<f64>,
    out: &mut Vec<(f64, Vec<f64>)>,
) -> Result<()> {
    let Some((first, rest)) = ms.split_first() else {
        out.push((p, values.clone()));
        return Ok(());
    };
    for o in first.distribution(v)?.outcomes {
        if o.probability == 0.0 {
            continue;
        }
        values.push(o.value);
        walk(rest, &o.collapsed_state, p * o.probability, values, out)?;
        values.pop();
    }
    Ok(())
}

/// Expected output of the arrangement for initial state `v0`: the average of
/// `f` over all joint outcomes. Copies are independent, so each monomial's
/// average is the product over copies of that copy's average; within a copy
/// the measurements run in declaration order with collapse in between.
pub fn exact_expected_output(arr: &Arrangement, v0: &StateVector) -> Result<f64> {
    check_dim(arr.dim(), v0.dim())?;
    let v = arr.state_at_t1(v0)?;
    let groups = arr.copy_groups();
    let mut per_copy = Vec::with_capacity(groups.len());
    for g in &groups {
        let ms = g
            .iter()
            .map(|&i| {
                let a = &arr.measurements()[i].operator;
                ProjectiveMeasurement::new(a, default_eig_tol(a))
            })
            .collect::<Result<Vec<_>>>()?;
        per_copy.push(copy_outcomes(&ms, &v)?);
    }
    // position of each measurement within its copy
    let mut slot = vec![(0, 0); arr.measurements().len()];
    for (c, g) in groups.iter().enumerate() {
        for (k, &i) in g.iter().enumerate() {
            slot[i] = (c, k);
        }
    }
    let mut total = 0.0;
    for (coef, powers) in &arr.combiner().terms {
        let mut term = *coef;
        for (c, outcomes) in per_copy.iter().enumerate() {
            let mine: Vec<(usize, i32)> =
                powers.iter().filter(|(i, _)| slot[*i].0 == c).map(|&(i, e)| (slot[i].1, e)).collect();
            if mine.is_empty() {
                continue;
            }
            let avg: f64 = outcomes
                .iter()
                .map(|(p, vals)| p * mine.iter().map(|&(k, e)| vals[k].powi(e)).product::<f64>())
                .sum();
            term *= avg;
        }
        total += term;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvcpReport {
    /// `|<C>_{t2} - expected output|` per state.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

impl AvcpReport {
    pub fn failures(&self) -> usize {
        self.deviations.iter().filter(|&&d| d > self.tol).count()
    }
}

/// Compares `<C>` at `t2` with the arrangement's expected output on each
/// state.
pub fn avcp_check(arr: &Arrangement, c: &HermitianOperator, states: &[StateVector], tol: f64) -> Result<AvcpReport> {
    check_dim(arr.dim(), c.dim())?;
    let mut deviations = Vec::with_capacity(states.len());
    for v0 in states {
        let lhs = expectation(c, &arr.state_at_t2(v0)?)?;
        deviations.push((lhs - exact_expected_output(arr, v0)?).abs());
    }
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(AvcpReport { pass: max_deviation <= tol, max_deviation, deviations, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrange::{coverage_states, Background};
    use crate::opcore::{apply_function, haar_state, tensor, ComplexMatrix};
    use crate::spin::angular_momentum;
    use crate::StreamFactory;

    fn plus() -> StateVector {
        let s = 0.5f64.sqrt();
        StateVector::from_reals(&[s, s]).unwrap()
    }

    fn square(a: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::new(a.matrix() * a.matrix()).unwrap()
    }

    #[test]
    fn three_arrangements_on_plus_state() {
        let z = HermitianOperator::pauli_z();
        let one = Arrangement::builder().measure("a", z.clone()).combine("a^2").build().unwrap();
        assert!((exact_expected_output(&one, &plus()).unwrap() - 1.0).abs() < 1e-15);
        let seq = Arrangement::builder().measure("a", z.clone()).measure("a2", z.clone()).combine("a*a2").build().unwrap();
        assert_eq!(seq.copy_count(), 1);
        assert!((exact_expected_output(&seq, &plus()).unwrap() - 1.0).abs() < 1e-15);
        let two = Arrangement::builder().measure("a", z.clone()).measure("a2", z).copies(vec![0, 1]).combine("a*a2").build().unwrap();
        assert!(exact_expected_output(&two, &plus()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn spin_sum_on_up_state() {
        let l = angular_momentum(2, 1.0);
        let arr = Arrangement::builder().measure("a", l.x.clone()).measure("b", l.z.clone()).combine("a + b").build().unwrap();
        let up = StateVector::basis(2, 0);
        assert!((exact_expected_output(&arr, &up).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn commuting_order_is_irrelevant() {
        let f = StreamFactory::new(31);
        let mut rng = f.stream(0);
        let a = HermitianOperator::random(4, &mut rng);
        let b = apply_function(&a, |x| x * x - 0.3 * x).unwrap();
        let fwd = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine("a*b^2 + a").build().unwrap();
        let rev = Arrangement::builder().measure("b", b).measure("a", a).combine("a*b^2 + a").build().unwrap();
        for _ in 0..20 {
            let v = haar_state(4, &mut rng);
            let d = exact_expected_output(&fwd, &v).unwrap() - exact_expected_output(&rev, &v).unwrap();
            assert!(d.abs() <= 1e-12);
        }
    }

    #[test]
    fn avcp_passes_on_eigenstates_only() {
        let (x, z) = (HermitianOperator::pauli_x(), HermitianOperator::pauli_z());
        let arr = Arrangement::builder().measure("a", x.clone()).measure("b", z.clone()).combine("a*b").build().unwrap();
        let c = HermitianOperator::new((x.matrix() * z.matrix() + z.matrix() * x.matrix()).scale(0.5)).unwrap();
        let eig = coverage_states(&[&x, &z], 2, 0, &mut StreamFactory::new(0).stream(0)).unwrap();
        assert!(avcp_check(&arr, &c, &eig, 1e-10).unwrap().pass);
        let mut rng = StreamFactory::new(32).stream(0);
        let haar: Vec<StateVector> = (0..20).map(|_| haar_state(2, &mut rng)).collect();
        assert!(avcp_check(&arr, &c, &haar, 1e-10).unwrap().failures() > 0);
    }

    #[test]
    fn sum_over_two_copies_is_represented() {
        let mut rng = StreamFactory::new(33).stream(0);
        let a = HermitianOperator::random(3, &mut rng);
        let b = HermitianOperator::random(3, &mut rng);
        let arr = Arrangement::builder().measure("a", a.clone()).measure("b", b.clone()).combine("a + b").build().unwrap();
        assert_eq!(arr.copy_count(), 2);
        let states: Vec<StateVector> = (0..100).map(|_| haar_state(3, &mut rng)).collect();
        let r = avcp_check(&arr, &a.add(&b).unwrap(), &states, 1e-10).unwrap();
        assert!(r.pass, "{}", r.max_deviation);
        let sq = Arrangement::builder().measure("a", a.clone()).combine("a^2").build().unwrap();
        assert!(avcp_check(&sq, &square(&a), &states, 1e-10).unwrap().pass);
    }

    #[test]
    fn generalized_function_rule_with_background() {
        let mut rng = StreamFactory::new(34).stream(0);
        let a = HermitianOperator::random(3, &mut rng);
        let h = HermitianOperator::random(3, &mut rng);
        let bg = Background { hamiltonian: h, hbar: 0.8, t0: 0.0, t1: 0.7, t2: 1.9 };
        let w = bg.transfer().unwrap();
        let fa = apply_function(&a, |x| x.powi(3) - 2.0 * x).unwrap();
        let c = HermitianOperator::new(&w * fa.matrix() * w.adjoint()).unwrap();
        let arr = Arrangement::builder().measure("a", a).background(bg).target("c", c.clone()).combine("a^3 - 2*a").build().unwrap();
        let states: Vec<StateVector> = (0..50).map(|_| haar_state(3, &mut rng)).collect();
        assert!(avcp_check(&arr, &c, &states, 1e-10).unwrap().pass);
    }

    #[test]
    fn subsystem_product_same_or_split_copies() {
        let mut rng = StreamFactory::new(35).stream(0);
        let (a, b) = (HermitianOperator::random(2, &mut rng), HermitianOperator::random(3, &mut rng));
        let ai = tensor(&a, &HermitianOperator::identity(3));
        let ib = tensor(&HermitianOperator::identity(2), &b);
        let same = Arrangement::builder().measure_on("a", ai.clone(), 0).measure_on("b", ib.clone(), 1).combine("a*b").build().unwrap();
        let split = Arrangement::builder()
            .measure_on("a", ai, 0)
            .measure_on("b", ib, 1)
            .copies(vec![0, 1])
            .combine("a*b")
            .build()
            .unwrap();
        assert!(split.conformance().unwrap().is_empty());
        for _ in 0..20 {
            let (u, w) = (haar_state(2, &mut rng), haar_state(3, &mut rng));
            let v = StateVector::new(u.amplitudes().kronecker(w.amplitudes())).unwrap();
            let d = exact_expected_output(&same, &v).unwrap() - exact_expected_output(&split, &v).unwrap();
            assert!(d.abs() < 1e-12);
        }
        let _ = ComplexMatrix::zeros(1, 1);
    }
}
