//! Time evolution: exact propagators for constant Hamiltonians, the
//! left-endpoint stepped product for time-dependent ones, and first-order
//! Heisenberg predictions.

use std::fmt;
use std::sync::Arc;

use crate::opcore::{c, check_dim, expectation, matrix_commutator, matrix_expectation, ComplexMatrix, HermitianOperator, StateVector, C64};
use crate::{Error, Result};

/// `exp(-i H dt / hbar)` from the spectral decomposition of `H`.
pub fn propagator(h: &HermitianOperator, dt: f64, hbar: f64) -> Result<ComplexMatrix> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let s = h.spectrum()?;
    Ok(s.reconstruct_with(|e| C64::from_polar(1.0, -e * dt / hbar)))
}

/// Hamiltonian as a function of time.
#[derive(Clone)]
pub enum Schedule {
    Constant(HermitianOperator),
    TimeDependent(Arc<dyn Fn(f64) -> HermitianOperator + Send + Sync>),
}

impl Schedule {
    pub fn at(&self, t: f64) -> HermitianOperator {
        match self {
            Schedule::Constant(h) => h.clone(),
            Schedule::TimeDependent(f) => f(t),
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(h) => f.debug_tuple("Constant").field(&h.dim()).finish(),
            Schedule::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionSpec {
    pub schedule: Schedule,
    pub hbar: f64,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

impl EvolutionSpec {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if self.t1 < self.t0 {
            return Err(Error::InvalidParameter("t1 must not precede t0".into()));
        }
        Ok(())
    }
}

/// Ordered product `V(t1 - e) ... V(t0 + e) V(t0)` of short-time exact
/// propagators, each frozen at its left endpoint. A final partial step
/// covers any remainder of `t1 - t0` not divisible by the step.
pub fn stepped_propagator(spec: &EvolutionSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let dim = spec.schedule.at(spec.t0).dim();
    let mut u = ComplexMatrix::identity(dim, dim);
    let span = spec.t1 - spec.t0;
    let full = (span / spec.step + 1e-9).floor() as usize;
    for k in 0..full {
        let t = spec.t0 + k as f64 * spec.step;
        u = propagator(&spec.schedule.at(t), spec.step, spec.hbar)? * u;
    }
    let rest = span - full as f64 * spec.step;
    if rest > 1e-12 * spec.step.max(span) {
        let t = spec.t0 + full as f64 * spec.step;
        u = propagator(&spec.schedule.at(t), rest, spec.hbar)? * u;
    }
    Ok(u)
}

/// `max_t |<H>_t - <H>_0|` over `samples` evenly spaced times in `[0, T]`.
pub fn energy_drift(h: &HermitianOperator, v0: &StateVector, t_final: f64, hbar: f64, samples: usize) -> Result<f64> {
    check_dim(h.dim(), v0.dim())?;
    let e0 = expectation(h, v0)?;
    let mut drift: f64 = 0.0;
    for k in 0..=samples.max(1) {
        let t = t_final * k as f64 / samples.max(1) as f64;
        let v = v0.evolve(&propagator(h, t, hbar)?)?;
        drift = drift.max((expectation(h, &v)? - e0).abs());
    }
    Ok(drift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergStep {
    /// `<A>_t + (i/hbar) dt <[H, A]>_t`
    pub prediction: f64,
    /// `<A>_{t+dt}` from the exact propagator.
    pub exact: f64,
    pub residual: f64,
}

pub fn heisenberg_step_expectation(
    a: &HermitianOperator,
    h: &HermitianOperator,
    v: &StateVector,
    dt: f64,
    hbar: f64,
) -> Result<HeisenbergStep> {
    check_dim(a.dim(), h.dim())?;
    let now = expectation(a, v)?;
    let k = matrix_commutator(h.matrix(), a.matrix());
    let rate = c(0.0, 1.0 / hbar) * matrix_expectation(&k, v)?;
    let prediction = now + dt * rate.re;
    let exact = expectation(a, &v.evolve(&propagator(h, dt, hbar)?)?)?;
    Ok(HeisenbergStep { prediction, exact, residual: (prediction - exact).abs() })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Self-convergence of the stepped propagator: errors `|U(e) - U(e/2)|` for
/// each step size, and the fitted log-log slope.
pub fn stepped_convergence(
    schedule: &Schedule,
    t0: f64,
    t1: f64,
    hbar: f64,
    steps: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let mut errors = Vec::with_capacity(steps.len());
    for &e in steps {
        let coarse = stepped_propagator(&EvolutionSpec { schedule: schedule.clone(), hbar, t0, t1, step: e })?;
        let fine = stepped_propagator(&EvolutionSpec { schedule: schedule.clone(), hbar, t0, t1, step: e / 2.0 })?;
        errors.push((coarse - fine).norm());
    }
    let slope = loglog_slope(steps, &errors);
    Ok((errors, slope))
}

/// `|U^dagger U - I|` (Frobenius).
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - ComplexMatrix::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{equal_up_to_phase, haar_state};
    use crate::StreamFactory;
    use std::f64::consts::PI;

    #[test]
    fn half_period_of_pauli_z_is_minus_identity() {
        let u = propagator(&HermitianOperator::pauli_z(), PI, 1.0).unwrap();
        assert!((u + ComplexMatrix::identity(2, 2)).norm() < 1e-12);
        let id = propagator(&HermitianOperator::pauli_x(), 0.0, 1.0).unwrap();
        assert!((id - ComplexMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn composition_law() {
        let f = StreamFactory::new(21);
        for k in 0..20 {
            let mut rng = f.stream(k);
            let h = HermitianOperator::random(4, &mut rng);
            let (t1, t2) = (0.3 + k as f64 * 0.1, 1.1 - k as f64 * 0.03);
            let lhs = propagator(&h, t1 + t2, 1.0).unwrap();
            let rhs = propagator(&h, t2, 1.0).unwrap() * propagator(&h, t1, 1.0).unwrap();
            assert!((lhs.clone() - rhs).norm() < 1e-12, "k = {k}");
            assert!(unitarity_defect(&lhs) < 1e-12);
        }
    }

    #[test]
    fn stepped_matches_exact_for_constant_h() {
        let mut rng = StreamFactory::new(22).stream(0);
        let h = HermitianOperator::random(3, &mut rng);
        let spec = EvolutionSpec { schedule: Schedule::Constant(h.clone()), hbar: 1.0, t0: 0.0, t1: 1.0, step: 0.01 };
        let u = stepped_propagator(&spec).unwrap();
        assert!((u - propagator(&h, 1.0, 1.0).unwrap()).norm() < 1e-10);
        let one = EvolutionSpec { step: 1.0, ..spec };
        assert!((stepped_propagator(&one).unwrap() - propagator(&h, 1.0, 1.0).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn stepped_product_is_first_order() {
        let sched = Schedule::TimeDependent(Arc::new(|t| {
            HermitianOperator::pauli_z().add(&HermitianOperator::pauli_x().scale(t)).unwrap()
        }));
        let steps = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let (errors, slope) = stepped_convergence(&sched, 0.0, 1.0, 1.0, &steps).unwrap();
        assert!((slope - 1.0).abs() <= 0.2, "slope {slope}, errors {errors:?}");
        let spec = EvolutionSpec { schedule: sched, hbar: 1.0, t0: 0.0, t1: 1.0, step: 0.01 };
        assert!(unitarity_defect(&stepped_propagator(&spec).unwrap()) < 1e-10);
    }

    #[test]
    fn energy_is_conserved() {
        let f = StreamFactory::new(23);
        let mut rng = f.stream(0);
        let h = HermitianOperator::random(5, &mut rng);
        for _ in 0..10 {
            let v = haar_state(5, &mut rng);
            assert!(energy_drift(&h, &v, 10.0, 1.0, 50).unwrap() <= 1e-10 * h.norm());
        }
        assert_eq!(energy_drift(&HermitianOperator::zeros(3), &haar_state(3, &mut rng), 10.0, 1.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn eigenstates_only_pick_up_phase() {
        let mut rng = StreamFactory::new(24).stream(0);
        let h = HermitianOperator::random(4, &mut rng);
        let s = h.spectrum().unwrap();
        for j in 0..4 {
            let v = s.eigenvector(j);
            for t in [0.5, 2.0, 7.0] {
                let w = v.evolve(&propagator(&h, t, 0.7).unwrap()).unwrap();
                assert!(equal_up_to_phase(&v, &w, 1e-12).unwrap());
                let expected = v.with_phase(-s.eigenvalues[j] * t / 0.7);
                assert!((w.amplitudes() - expected.amplitudes()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn heisenberg_prediction_converges_quadratically() {
        let v = StateVector::from_reals(&[0.6, 0.8]).unwrap();
        let a = HermitianOperator::pauli_x();
        let h = HermitianOperator::pauli_z();
        let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let res: Vec<f64> = dts
            .iter()
            .map(|&dt| heisenberg_step_expectation(&a, &h, &v, dt, 1.0).unwrap().residual)
            .collect();
        let slope = loglog_slope(&dts, &res);
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        let same = heisenberg_step_expectation(&h, &h, &v, 0.1, 1.0).unwrap();
        assert_eq!(same.prediction, expectation(&h, &v).unwrap());
    }
}
