//! Complex linear algebra and projective measurement primitives.
//!
//! Norms are Frobenius norms throughout; tolerances documented as "relative"
//! are multiplied by the Frobenius norm of the operator involved.

mod measure;

pub use measure::{born_distribution, default_eig_tol, sample_outcome, Outcome, OutcomeDistribution, ProjectiveMeasurement};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from rows of complex entries.
pub fn matrix_from_rows(rows: &[Vec<C64>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) || cols != n {
        return Err(Error::NotSquare { rows: n, cols });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A validated Hermitian operator.
///
/// Construction symmetrizes the input, so downstream code sees an exactly
/// Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        hermitian_from_matrix(m, DEFAULT_HERMITICITY_TOL)
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: DMatrix::zeros(dim, dim) }
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0)));
        Self { matrix: DMatrix::from_diagonal(&d) }
    }

    pub fn pauli_x() -> Self {
        Self::from_trusted(DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]))
    }

    pub fn pauli_y() -> Self {
        Self::from_trusted(DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]))
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// Random Hermitian matrix with independent Gaussian entries (GUE-like).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        Self::from_trusted((&g + g.adjoint()).scale(0.5))
    }

    /// Symmetrizes without validation. Callers guarantee the input is
    /// Hermitian up to rounding.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        Self { matrix: h }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix - &other.matrix })
    }

    /// Operator shifted by a multiple of the identity.
    pub fn shift(&self, eps: f64) -> Self {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += eps;
        }
        Self { matrix: m }
    }

    /// `U^dagger A U` for a unitary `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        check_dim(self.dim(), u.nrows())?;
        Ok(Self::from_trusted(u.adjoint() * &self.matrix * u))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        spectrum(self)
    }
}

/// Validates `m` as Hermitian: `|m - m^dagger| <= tol * |m|`.
pub fn hermitian_from_matrix(m: ComplexMatrix, tol: f64) -> Result<HermitianOperator> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let deviation = (&m - m.adjoint()).norm();
    let allowed = tol * m.norm();
    if deviation > allowed {
        return Err(Error::NotHermitian { deviation, allowed });
    }
    Ok(HermitianOperator::from_trusted(m))
}

/// A unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(DVector::from_column_slice(amps))
    }

    pub fn from_reals(amps: &[f64]) -> Result<Self> {
        Self::normalized(DVector::from_iterator(amps.len(), amps.iter().map(|&x| c(x, 0.0))))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub(crate) fn from_trusted(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Applies a matrix and renormalizes; intended for unitaries, where the
    /// renormalization only removes rounding drift.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        check_dim(u.ncols(), self.dim())?;
        Self::normalized(u * &self.amplitudes)
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        let p = C64::from_polar(1.0, phase);
        Self { amplitudes: self.amplitudes.map(|z| z * p) }
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> StateVector {
        StateVector::from_trusted(self.eigenvectors.column(i).into_owned())
    }

    /// `sum_i g(a_i) v_i v_i^dagger`.
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &a) in self.eigenvalues.iter().enumerate() {
            let s = g(a);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        scaled * v.adjoint()
    }

    pub fn residual(&self, a: &HermitianOperator) -> f64 {
        (0..self.dim())
            .map(|i| {
                let v = self.eigenvectors.column(i);
                (a.matrix() * v - v * c(self.eigenvalues[i], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        (g - ComplexMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn spectrum(a: &HermitianOperator) -> Result<Spectrum> {
    let n = a.dim();
    if n == 0 {
        return Ok(Spectrum { eigenvalues: vec![], eigenvectors: DMatrix::zeros(0, 0) });
    }
    let eig = nalgebra::SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 0)
        .ok_or(Error::NumericalFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Spectral function calculus: `sum_i f(a_i) v_i v_i^dagger`.
pub fn apply_function(a: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let s = spectrum(a)?;
    let mut values = Vec::with_capacity(s.dim());
    for &ai in &s.eigenvalues {
        let y = f(ai);
        if !y.is_finite() {
            return Err(Error::DomainError(ai));
        }
        values.push(y);
    }
    let mut scaled = s.eigenvectors.clone();
    for (j, y) in values.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= *y);
    }
    Ok(HermitianOperator::from_trusted(scaled * s.eigenvectors.adjoint()))
}

pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<ComplexMatrix> {
    check_dim(a.dim(), b.dim())?;
    Ok(matrix_commutator(a.matrix(), b.matrix()))
}

pub fn matrix_commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Whether `[A, B]` vanishes within `tol * |A| |B|`.
pub fn commute(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> Result<bool> {
    let k = commutator(a, b)?;
    Ok(k.norm() <= tol * a.norm() * b.norm())
}

/// `v^dagger A v`. The imaginary part must stay below `1e-12 * max(1, |A|)`.
pub fn expectation(a: &HermitianOperator, v: &StateVector) -> Result<f64> {
    check_dim(a.dim(), v.dim())?;
    let z = v.amplitudes().dotc(&(a.matrix() * v.amplitudes()));
    if z.im.abs() > 1e-12 * a.norm().max(1.0) {
        return Err(Error::NotReal(z.im));
    }
    Ok(z.re)
}

/// `v^dagger M v` for an arbitrary matrix.
pub fn matrix_expectation(m: &ComplexMatrix, v: &StateVector) -> Result<C64> {
    check_dim(m.ncols(), v.dim())?;
    Ok(v.amplitudes().dotc(&(m * v.amplitudes())))
}

/// Kronecker product `A (x) B`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_trusted(a.matrix().kronecker(b.matrix()))
}

/// Whether `min_{|l|=1} |u - l w| <= tol`.
pub fn equal_up_to_phase(u: &StateVector, w: &StateVector, tol: f64) -> Result<bool> {
    check_dim(u.dim(), w.dim())?;
    Ok(phase_distance(u.amplitudes(), w.amplitudes()) <= tol)
}

pub(crate) fn phase_distance(u: &DVector<C64>, w: &DVector<C64>) -> f64 {
    let overlap = w.dotc(u);
    let lambda = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    (u - w * lambda).norm()
}

/// Normalized vector of independent standard complex Gaussians.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    assert!(dim >= 1, "haar_state needs dim >= 1");
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        if let Ok(s) = StateVector::normalized(v) {
            return s;
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StreamFactory;

    fn frob(m: &ComplexMatrix) -> f64 {
        m.norm()
    }

    #[test]
    fn hermitian_validation() {
        assert!(HermitianOperator::new(ComplexMatrix::identity(2, 2)).is_ok());
        let sy = matrix_from_rows(&[vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]]).unwrap();
        assert!(HermitianOperator::new(sy).is_ok());
        let upper = matrix_from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.)]]).unwrap();
        assert!(matches!(HermitianOperator::new(upper), Err(Error::NotHermitian { .. })));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_from_matrix(rect, 1e-12), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn pauli_spectra() {
        let z = spectrum(&HermitianOperator::pauli_z()).unwrap();
        assert_eq!(z.eigenvalues, vec![-1.0, 1.0]);
        let x = spectrum(&HermitianOperator::pauli_x()).unwrap();
        assert!((x.eigenvalues[0] + 1.0).abs() < 1e-14 && (x.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = StateVector::from_reals(&[s, -s]).unwrap();
        let plus = StateVector::from_reals(&[s, s]).unwrap();
        assert!(equal_up_to_phase(&x.eigenvector(0), &minus, 1e-12).unwrap());
        assert!(equal_up_to_phase(&x.eigenvector(1), &plus, 1e-12).unwrap());
        let id = spectrum(&HermitianOperator::identity(4)).unwrap();
        assert!(id.eigenvalues.iter().all(|&e| (e - 1.0).abs() < 1e-14));
    }

    #[test]
    fn function_calculus() {
        let z2 = apply_function(&HermitianOperator::pauli_z(), |a| a * a).unwrap();
        assert!(frob(&(z2.matrix() - ComplexMatrix::identity(2, 2))) < 1e-12);
        let x3 = apply_function(&HermitianOperator::pauli_x(), |a| a.powi(3)).unwrap();
        assert!(frob(&(x3.matrix() - HermitianOperator::pauli_x().matrix())) < 1e-12);
        let mut rng = StreamFactory::new(1).stream(0);
        let a = HermitianOperator::random(4, &mut rng);
        let same = apply_function(&a, |x| x).unwrap();
        assert!(frob(&(same.matrix() - a.matrix())) < 1e-10 * a.norm());
        assert!(frob(&commutator(&a, &apply_function(&a, f64::exp).unwrap()).unwrap()) < 1e-10 * a.norm().exp());
        assert!(matches!(apply_function(&HermitianOperator::pauli_z(), f64::ln), Err(Error::DomainError(_))));
    }

    #[test]
    fn pauli_commutator() {
        // [sx, sy] = 2i sz, by direct 2x2 multiplication
        let k = commutator(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_y()).unwrap();
        let expected = matrix_from_rows(&[vec![c(0., 2.), c(0., 0.)], vec![c(0., 0.), c(0., -2.)]]).unwrap();
        assert!(frob(&(k - expected)) < 1e-15);
        let a = HermitianOperator::pauli_y();
        assert_eq!(frob(&commutator(&a, &a).unwrap()), 0.0);
        assert_eq!(frob(&commutator(&a, &HermitianOperator::identity(2)).unwrap()), 0.0);
        assert!(matches!(
            commutator(&a, &HermitianOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expectations() {
        let z = HermitianOperator::pauli_z();
        assert_eq!(expectation(&z, &StateVector::basis(2, 0)).unwrap(), 1.0);
        let plus = StateVector::from_reals(&[1.0, 1.0]).unwrap();
        assert!(expectation(&z, &plus).unwrap().abs() < 1e-15);
        let mut rng = StreamFactory::new(2).stream(0);
        let v = haar_state(5, &mut rng);
        assert!((expectation(&HermitianOperator::identity(5), &v).unwrap() - 1.0).abs() < 1e-14);
        assert!(expectation(&z, &v).is_err());
    }

    #[test]
    fn tensor_products() {
        let a = tensor(&HermitianOperator::pauli_z(), &HermitianOperator::identity(2));
        let b = tensor(&HermitianOperator::identity(2), &HermitianOperator::pauli_x());
        assert!(frob(&commutator(&a, &b).unwrap()) < 1e-12);
        let id = tensor(&HermitianOperator::identity(2), &HermitianOperator::identity(3));
        assert_eq!(id.matrix(), &ComplexMatrix::identity(6, 6));
        let zz = spectrum(&tensor(&HermitianOperator::pauli_z(), &HermitianOperator::pauli_z())).unwrap();
        assert_eq!(zz.eigenvalues, vec![-1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn phase_equality() {
        let mut rng = StreamFactory::new(3).stream(0);
        let v = haar_state(3, &mut rng);
        assert!(equal_up_to_phase(&v, &v.with_phase(std::f64::consts::FRAC_PI_3), 1e-12).unwrap());
        assert!(equal_up_to_phase(&v, &v.with_phase(std::f64::consts::PI), 1e-12).unwrap());
        assert!(!equal_up_to_phase(&StateVector::basis(2, 0), &StateVector::basis(2, 1), 1e-6).unwrap());
    }

    #[test]
    fn haar_samples() {
        let mut rng = StreamFactory::new(4).stream(0);
        let s = haar_state(1, &mut rng);
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let z = HermitianOperator::pauli_z();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let v = haar_state(2, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let e = expectation(&z, &v).unwrap();
            sum += e;
            sum2 += e * e;
        }
        let mean = sum / n as f64;
        let sd = (sum2 / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() <= 5.0 * sd / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn spectrum_invariants_on_random_operators() {
        let f = StreamFactory::new(5);
        for k in 0..20u64 {
            let mut rng = f.stream(k);
            let a = HermitianOperator::random(1 + (k as usize % 7), &mut rng);
            let s = spectrum(&a).unwrap();
            assert!(s.residual(&a) <= 1e-10 * a.norm().max(1.0));
            assert!(s.orthonormality_defect() <= 1e-10);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let back = s.reconstruct_with(|x| c(x, 0.0));
            assert!(frob(&(back - a.matrix())) <= 1e-10 * a.norm());
        }
    }
}
