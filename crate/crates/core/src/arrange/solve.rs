use nalgebra::{DMatrix, DVector};

use crate::opcore::{c, haar_state, ComplexMatrix, HermitianOperator, StateVector};
use crate::{Error, Result, StreamFactory};

use super::{exact_expected_output, Arrangement};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Fit states; defaults to `3 dim^2`.
    pub fit_states: Option<usize>,
    /// Fresh validation states; defaults to `dim^2`.
    pub validation_states: Option<usize>,
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { fit_states: None, validation_states: None, residual_tol: 1e-8, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub enum Representation {
    Representing(HermitianOperator),
    /// Best least-squares fit misses the expected output by `residual` on
    /// some validation state.
    Infeasible { residual: f64, fit: HermitianOperator },
}

impl Representation {
    pub fn operator(&self) -> Option<&HermitianOperator> {
        match self {
            Representation::Representing(c) => Some(c),
            Representation::Infeasible { .. } => None,
        }
    }
}

/// Real basis of the Hermitian `dim x dim` matrices: `e_kk`, `e_kl + e_lk`
/// and `i (e_kl - e_lk)` for `k < l`.
fn hermitian_basis(dim: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(dim * dim);
    for k in 0..dim {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0, 0.0);
        out.push(m);
    }
    for k in 0..dim {
        for l in k + 1..dim {
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(k, l)] = c(1.0, 0.0);
            m[(l, k)] = c(1.0, 0.0);
            out.push(m);
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(k, l)] = c(0.0, 1.0);
            m[(l, k)] = c(0.0, -1.0);
            out.push(m);
        }
    }
    out
}

/// `v^dagger B v` for each basis element: real by construction.
fn features(basis: &[ComplexMatrix], v: &StateVector) -> Vec<f64> {
    let a = v.amplitudes();
    basis.iter().map(|b| a.dotc(&(b * a)).re).collect()
}

/// Fits a Hermitian `C` with `<C>_{t2} = expected output` on Haar states and
/// validates it on fresh ones.
pub fn solve_representing_operator(arr: &Arrangement, opts: &SolveOptions) -> Result<Representation> {
    let dim = arr.dim();
    let n = dim * dim;
    let n_fit = opts.fit_states.unwrap_or(3 * n);
    let n_val = opts.validation_states.unwrap_or(n);
    if n_fit < n {
        return Err(Error::InvalidParameter(format!("need at least {n} fit states, got {n_fit}")));
    }
    let basis = hermitian_basis(dim);
    let factory = StreamFactory::new(opts.seed);
    let sample = |salt: u64, count: usize| -> Result<Vec<(Vec<f64>, f64)>> {
        let mut rng = factory.derive(salt).stream(0);
        (0..count)
            .map(|_| {
                let v0 = haar_state(dim, &mut rng);
                let y = exact_expected_output(arr, &v0)?;
                Ok((features(&basis, &arr.state_at_t2(&v0)?), y))
            })
            .collect()
    };

    let fit = sample(1, n_fit)?;
    let x = DMatrix::from_fn(n_fit, n, |i, j| fit[i].0[j]);
    let y = DVector::from_iterator(n_fit, fit.iter().map(|r| r.1));
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-10 {
        return Err(Error::IllConditioned(if smax > 0.0 { smin / smax } else { 0.0 }));
    }
    let coef = svd.solve(&y, 0.0).map_err(|_| Error::NumericalFailure)?;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (b, w) in basis.iter().zip(coef.iter()) {
        m += b * c(*w, 0.0);
    }
    let cop = HermitianOperator::new(m)?;

    let mut residual: f64 = 0.0;
    for (f, y) in sample(2, n_val)? {
        let pred: f64 = f.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
        residual = residual.max((pred - y).abs());
    }
    Ok(if residual <= opts.residual_tol {
        Representation::Representing(cop)
    } else {
        Representation::Infeasible { residual, fit: cop }
    })
}
