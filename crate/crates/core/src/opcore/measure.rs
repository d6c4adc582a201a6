use nalgebra::DVector;
use rand::Rng;

use super::{c, check_dim, spectrum, HermitianOperator, Spectrum, StateVector, C64};
use crate::Result;

/// Below this projection norm the collapsed state is taken to be the first
/// eigenvector of the eigenspace; such outcomes have negligible probability.
const NULL_PROJECTION: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub value: f64,
    pub probability: f64,
    pub collapsed_state: StateVector,
}

#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<Outcome>,
}

impl OutcomeDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|o| o.value * o.probability).sum()
    }
}

#[derive(Debug, Clone)]
struct Eigenspace {
    value: f64,
    columns: Vec<usize>,
}

/// A projective measurement with precomputed eigenspaces.
///
/// Eigenvalues whose consecutive gaps are at most `eig_tol` are merged into
/// one outcome (the mean of the merged eigenvalues); collapse is onto the
/// whole eigenspace.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    spectrum: Spectrum,
    spaces: Vec<Eigenspace>,
}

impl ProjectiveMeasurement {
    pub fn new(a: &HermitianOperator, eig_tol: f64) -> Result<Self> {
        let spectrum = spectrum(a)?;
        let mut spaces: Vec<Eigenspace> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
            match spaces.last_mut() {
                Some(space) if e - last <= eig_tol => space.columns.push(i),
                _ => spaces.push(Eigenspace { value: e, columns: vec![i] }),
            }
            last = e;
        }
        for space in &mut spaces {
            let sum: f64 = space.columns.iter().map(|&i| spectrum.eigenvalues[i]).sum();
            space.value = sum / space.columns.len() as f64;
        }
        Ok(Self { spectrum, spaces })
    }

    /// Default merge tolerance `1e-9 * |A|`.
    pub fn with_default_tol(a: &HermitianOperator) -> Result<Self> {
        Self::new(a, default_eig_tol(a))
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn values(&self) -> Vec<f64> {
        self.spaces.iter().map(|s| s.value).collect()
    }

    fn overlaps(&self, v: &StateVector) -> DVector<C64> {
        self.spectrum.eigenvectors.ad_mul(v.amplitudes())
    }

    fn probability(&self, k: usize, overlaps: &DVector<C64>) -> f64 {
        self.spaces[k].columns.iter().map(|&i| overlaps[i].norm_sqr()).sum()
    }

    fn collapse(&self, k: usize, overlaps: &DVector<C64>) -> StateVector {
        let cols = &self.spaces[k].columns;
        let n = self.dim();
        let mut w = DVector::from_element(n, c(0.0, 0.0));
        for &i in cols {
            w.axpy(overlaps[i], &self.spectrum.eigenvectors.column(i), c(1.0, 0.0));
        }
        let norm = w.norm();
        if norm <= NULL_PROJECTION {
            return self.spectrum.eigenvector(cols[0]);
        }
        StateVector::from_trusted(w.unscale(norm))
    }

    pub fn distribution(&self, v: &StateVector) -> Result<OutcomeDistribution> {
        check_dim(self.dim(), v.dim())?;
        let ov = self.overlaps(v);
        let outcomes = (0..self.spaces.len())
            .map(|k| Outcome {
                value: self.spaces[k].value,
                probability: self.probability(k, &ov),
                collapsed_state: self.collapse(k, &ov),
            })
            .collect();
        Ok(OutcomeDistribution { outcomes })
    }

    /// Draws one outcome and returns its value and the collapsed state,
    /// without materializing the whole distribution.
    pub fn sample<R: Rng + ?Sized>(&self, v: &StateVector, rng: &mut R) -> Result<(f64, StateVector)> {
        check_dim(self.dim(), v.dim())?;
        let ov = self.overlaps(v);
        let probs: Vec<f64> = (0..self.spaces.len()).map(|k| self.probability(k, &ov)).collect();
        let k = pick(&probs, rng.random::<f64>());
        Ok((self.spaces[k].value, self.collapse(k, &ov)))
    }
}

pub fn default_eig_tol(a: &HermitianOperator) -> f64 {
    1e-9 * a.norm()
}

/// Born-rule distribution of a projective measurement of `a` on `v`.
pub fn born_distribution(a: &HermitianOperator, v: &StateVector, eig_tol: f64) -> Result<OutcomeDistribution> {
    ProjectiveMeasurement::new(a, eig_tol)?.distribution(v)
}

/// Draws an outcome with probability `p_k`.
pub fn sample_outcome<R: Rng + ?Sized>(d: &OutcomeDistribution, rng: &mut R) -> (f64, StateVector) {
    let probs: Vec<f64> = d.outcomes.iter().map(|o| o.probability).collect();
    let k = pick(&probs, rng.random::<f64>());
    let o = &d.outcomes[k];
    (o.value, o.collapsed_state.clone())
}

/// Inverse-CDF selection; `u` in [0, 1). Rounding slack at the top end
/// falls to the last outcome with positive probability.
fn pick(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
