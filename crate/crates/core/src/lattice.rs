//! Position, momentum and displacement on a periodic lattice.
//!
//! Sites `x_n = a (n - M/2)`, `n = 0..M`. Momentum is diagonal in the
//! discrete Fourier basis with wavenumbers `k_m` in `(-pi/a, pi/a]`, so
//! `exp(-i e D)` with `D = P / hbar` translates band-limited states by `e`
//! and integer-site translations are exact circular shifts:
//! `(exp(-i s a D) psi)_n = psi_{n - s}`.
//!
//! `[X, P] = i hbar` has no finite-matrix solution (take the trace), so the
//! canonical relation is checked state by state.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rustfft::{Fft, FftPlanner};

use crate::opcore::{c, check_dim, ComplexMatrix, HermitianOperator, StateVector, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub sites: usize,
    pub spacing: f64,
    pub hbar: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { sites: 256, spacing: 1.0, hbar: 1.0 }
    }
}

impl LatticeConfig {
    pub fn new(sites: usize, spacing: f64, hbar: f64) -> Result<Self> {
        if sites < 4 {
            return Err(Error::InvalidParameter(format!("lattice needs at least 4 sites, got {sites}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { sites, spacing, hbar })
    }

    pub fn position(&self, n: usize) -> f64 {
        self.spacing * (n as f64 - (self.sites / 2) as f64)
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.sites).map(|n| self.position(n)).collect()
    }

    /// Wavenumber of DFT mode `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let big = self.sites as i64;
        let mut s = m as i64;
        if 2 * s > big {
            s -= big;
        }
        2.0 * PI * s as f64 / (big as f64 * self.spacing)
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.sites).map(|m| self.wavenumber(m)).collect()
    }
}

/// Unitary DFT on the lattice with cached plans.
pub struct Fourier {
    cfg: LatticeConfig,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl Fourier {
    pub fn new(cfg: LatticeConfig) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(cfg.sites),
            inv: planner.plan_fft_inverse(cfg.sites),
            k: cfg.wavenumbers(),
            cfg,
        }
    }

    pub fn forward(&self, v: &DVector<C64>) -> DVector<C64> {
        self.run(&self.fwd, v)
    }

    pub fn inverse(&self, v: &DVector<C64>) -> DVector<C64> {
        self.run(&self.inv, v)
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, v: &DVector<C64>) -> DVector<C64> {
        let mut buf: Vec<C64> = v.iter().cloned().collect();
        plan.process(&mut buf);
        let s = 1.0 / (self.cfg.sites as f64).sqrt();
        DVector::from_iterator(buf.len(), buf.into_iter().map(|z| z * s))
    }

    /// `F^dagger diag(g(k)) F v`
    pub fn apply_diagonal(&self, v: &DVector<C64>, g: impl Fn(f64) -> C64) -> DVector<C64> {
        let mut w = self.forward(v);
        for (z, &k) in w.iter_mut().zip(&self.k) {
            *z *= g(k);
        }
        self.inverse(&w)
    }

    /// `P v`
    pub fn momentum(&self, v: &DVector<C64>) -> DVector<C64> {
        let h = self.cfg.hbar;
        self.apply_diagonal(v, |k| c(h * k, 0.0))
    }

    /// `exp(-i e D) v`
    pub fn displace(&self, v: &DVector<C64>, eps: f64) -> DVector<C64> {
        self.apply_diagonal(v, |k| C64::from_polar(1.0, -eps * k))
    }

    fn dense(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.cfg.sites;
        let mut m = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.apply_diagonal(&DVector::from_fn(n, |i, _| c((i == j) as u8 as f64, 0.0)), &g);
            m.set_column(j, &col);
        }
        m
    }
}

pub fn lattice_position(cfg: &LatticeConfig) -> HermitianOperator {
    HermitianOperator::diagonal(&cfg.positions())
}

/// `P = F^dagger diag(hbar k) F`
pub fn lattice_momentum(cfg: &LatticeConfig) -> HermitianOperator {
    let h = cfg.hbar;
    HermitianOperator::new(Fourier::new(*cfg).dense(|k| c(h * k, 0.0))).expect("hermitian by construction")
}

/// `D = P / hbar`
pub fn displacement_operator(cfg: &LatticeConfig) -> HermitianOperator {
    HermitianOperator::new(Fourier::new(*cfg).dense(|k| c(k, 0.0))).expect("hermitian by construction")
}

/// Dense `exp(-i e D)`.
pub fn displacement_unitary(cfg: &LatticeConfig, eps: f64) -> ComplexMatrix {
    Fourier::new(*cfg).dense(|k| C64::from_polar(1.0, -eps * k))
}

/// Plane wave of DFT mode `m`; eigenvector of `P` with eigenvalue `hbar k_m`.
pub fn plane_wave(cfg: &LatticeConfig, m: usize) -> StateVector {
    let n = cfg.sites;
    let s = 1.0 / (n as f64).sqrt();
    StateVector::from_trusted(DVector::from_fn(n, |j, _| C64::from_polar(s, 2.0 * PI * (m * j) as f64 / n as f64)))
}

/// `psi_{n - s}` with indices mod `M`.
pub fn circular_shift(psi: &StateVector, sites: i64) -> StateVector {
    let n = psi.dim() as i64;
    let a = psi.amplitudes();
    StateVector::from_trusted(DVector::from_fn(n as usize, |j, _| a[(j as i64 - sites).rem_euclid(n) as usize]))
}

/// `|circular_shift(psi, s) - exp(-i s a D) psi|`; phases must agree.
pub fn shift_compare(psi: &StateVector, sites: i64, cfg: &LatticeConfig) -> Result<f64> {
    check_dim(cfg.sites, psi.dim())?;
    let f = Fourier::new(*cfg);
    let moved = f.displace(psi.amplitudes(), sites as f64 * cfg.spacing);
    Ok((circular_shift(psi, sites).amplitudes() - moved).norm())
}

/// `<psi|[X, P]|psi>`
pub fn canonical_commutator_expectation(psi: &StateVector, cfg: &LatticeConfig) -> Result<C64> {
    check_dim(cfg.sites, psi.dim())?;
    let f = Fourier::new(*cfg);
    let x = DVector::from_vec(cfg.positions().into_iter().map(|x| c(x, 0.0)).collect());
    let v = psi.amplitudes();
    let xv = v.component_mul(&x);
    let xpv = f.momentum(v).component_mul(&x);
    let pxv = f.momentum(&xv);
    Ok(v.dotc(&(xpv - pxv)))
}

/// `|<psi|[X, P]|psi> - i hbar|`
pub fn canonical_defect(psi: &StateVector, cfg: &LatticeConfig) -> Result<f64> {
    Ok((canonical_commutator_expectation(psi, cfg)? - c(0.0, cfg.hbar)).norm())
}

/// `|<psi|[X, D]|psi> - i|`, i.e. [`canonical_defect`] over `hbar`.
pub fn displacement_defect(psi: &StateVector, cfg: &LatticeConfig) -> Result<f64> {
    Ok((canonical_commutator_expectation(psi, cfg)? / cfg.hbar - c(0.0, 1.0)).norm())
}

/// Normalized `exp(-(x - x0)^2 / (4 w^2) + i k0 x)` sampled on the sites;
/// `w` is the position spread of `|psi|^2`.
pub fn gaussian_packet(cfg: &LatticeConfig, center: f64, width: f64, k0: f64) -> Result<StateVector> {
    if !(width >= cfg.spacing) || !width.is_finite() {
        return Err(Error::InvalidWidth { width, spacing: cfg.spacing });
    }
    if k0.abs() > PI / cfg.spacing {
        return Err(Error::InvalidParameter(format!("carrier {k0} outside the Brillouin zone")));
    }
    let xs = cfg.positions();
    let v = DVector::from_fn(cfg.sites, |n, _| {
        let x = xs[n];
        C64::from_polar((-(x - center).powi(2) / (4.0 * width * width)).exp(), k0 * x)
    });
    StateVector::normalized(v)
}

/// `<X>` and `<P>` of a lattice state.
pub fn position_momentum(psi: &StateVector, cfg: &LatticeConfig) -> Result<(f64, f64)> {
    check_dim(cfg.sites, psi.dim())?;
    let f = Fourier::new(*cfg);
    let v = psi.amplitudes();
    let xs = cfg.positions();
    let ex: f64 = v.iter().zip(&xs).map(|(z, x)| z.norm_sqr() * x).sum();
    let ep = v.dotc(&f.momentum(v)).re;
    Ok((ex, ep))
}

/// `(<x>_{dt} - <x>_0) / dt` under `H = c P`.
pub fn ehrenfest_rate(psi: &StateVector, cfg: &LatticeConfig, speed: f64, dt: f64) -> Result<f64> {
    check_dim(cfg.sites, psi.dim())?;
    let f = Fourier::new(*cfg);
    let h = cfg.hbar;
    // exp(-i H dt / hbar) = exp(-i c dt P / hbar)
    let later = f.apply_diagonal(psi.amplitudes(), |k| C64::from_polar(1.0, -speed * dt * h * k / h));
    let (x0, _) = position_momentum(psi, cfg)?;
    let (x1, _) = position_momentum(&StateVector::from_trusted(later), cfg)?;
    Ok((x1 - x0) / dt)
}

/// `(|<x>' - <x> - e|, |<p>' - <p>|)` after `exp(-i e D)`.
pub fn displaced_frame_check(psi: &StateVector, eps: f64, cfg: &LatticeConfig) -> Result<(f64, f64)> {
    check_dim(cfg.sites, psi.dim())?;
    let f = Fourier::new(*cfg);
    let moved = StateVector::from_trusted(f.displace(psi.amplitudes(), eps));
    let (x0, p0) = position_momentum(psi, cfg)?;
    let (x1, p1) = position_momentum(&moved, cfg)?;
    Ok(((x1 - x0 - eps).abs(), (p1 - p0).abs()))
}

/// `X + e I` keeps the site eigenvectors and shifts every eigenvalue by `e`:
/// returns the largest deviation of `(X + e) |n>` from `(x_n + e) |n>`.
pub fn shifted_position_defect(cfg: &LatticeConfig, eps: f64) -> f64 {
    let xe = lattice_position(cfg).shift(eps);
    (0..cfg.sites)
        .map(|n| {
            let b = StateVector::basis(cfg.sites, n);
            (xe.matrix() * b.amplitudes() - b.amplitudes() * c(cfg.position(n) + eps, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// Trigonometric interpolant of the lattice values at position `x`, using
/// the symmetric wavenumbers. Exact on the sites for states with no Nyquist
/// content.
pub fn band_limited_value(psi: &StateVector, cfg: &LatticeConfig, x: f64) -> C64 {
    let f = Fourier::new(*cfg);
    let w = f.forward(psi.amplitudes());
    let x0 = cfg.position(0);
    let s = 1.0 / (cfg.sites as f64).sqrt();
    w.iter().enumerate().map(|(m, z)| z * C64::from_polar(s, cfg.wavenumber(m) * (x - x0))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{heisenberg_step_expectation, propagator};
    use crate::opcore::{equal_up_to_phase, expectation, haar_state};
    use crate::StreamFactory;

    fn cfg(m: usize) -> LatticeConfig {
        LatticeConfig::new(m, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(3, 1.0, 1.0).is_err());
        assert!(LatticeConfig::new(8, 0.0, 1.0).is_err());
        assert_eq!(cfg(4).positions(), vec![-2.0, -1.0, 0.0, 1.0]);
        let k = cfg(8).wavenumbers();
        assert!((k[4] - PI).abs() < 1e-15 && k[5] < 0.0);
    }

    #[test]
    fn position_examples() {
        let c4 = cfg(4);
        let x = lattice_position(&c4);
        assert_eq!(expectation(&x, &StateVector::basis(4, 1)).unwrap(), -1.0);
        let c64 = cfg(64);
        let g = gaussian_packet(&c64, 0.0, 4.0, 0.0).unwrap();
        assert!(expectation(&lattice_position(&c64), &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn momentum_examples() {
        let c = cfg(32);
        let p = lattice_momentum(&c);
        for m in [0, 3, 16, 20] {
            let w = plane_wave(&c, m);
            let pw = p.matrix() * w.amplitudes();
            assert!((pw - w.amplitudes() * crate::opcore::c(c.hbar * c.wavenumber(m), 0.0)).norm() < 1e-12);
        }
        let flat = StateVector::normalized(DVector::from_element(32, crate::opcore::c(1.0, 0.0))).unwrap();
        assert!(expectation(&p, &flat).unwrap().abs() < 1e-12);
        let c256 = LatticeConfig::default();
        for k0 in [0.3, -0.7, PI / 2.0] {
            let g = gaussian_packet(&c256, 0.0, 8.0, k0).unwrap();
            let (_, ep) = position_momentum(&g, &c256).unwrap();
            assert!((ep - k0).abs() < 1e-8, "{k0}: {ep}");
        }
    }

    #[test]
    fn displacement_moves_sites_forward() {
        let c = cfg(16);
        let u = displacement_unitary(&c, c.spacing);
        for n in [0, 5, 15] {
            let moved = StateVector::basis(16, n).evolve(&u).unwrap();
            let want = StateVector::basis(16, (n + 1) % 16);
            assert!((moved.amplitudes() - want.amplitudes()).norm() < 1e-12);
            assert!(equal_up_to_phase(&moved, &want, 1e-12).unwrap());
        }
        assert!((displacement_unitary(&c, 0.0) - ComplexMatrix::identity(16, 16)).norm() < 1e-12);
        assert!((displacement_unitary(&c, 16.0) - ComplexMatrix::identity(16, 16)).norm() < 1e-10);
        let d = displacement_operator(&c);
        let p = lattice_momentum(&c);
        assert!((d.matrix().scale(c.hbar) - p.matrix()).norm() < 1e-12);
        // agrees with the spectral exponential
        let spectral = propagator(&d, 2.0, 1.0).unwrap();
        assert!((spectral - displacement_unitary(&c, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn shifts_are_exact() {
        let c = cfg(64);
        let mut rng = StreamFactory::new(71).stream(0);
        let psi = haar_state(64, &mut rng);
        // zero shift is an FFT round trip
        assert!(shift_compare(&psi, 0, &c).unwrap() < 1e-14);
        assert!(shift_compare(&psi, 1, &c).unwrap() <= 1e-12);
        assert!(shift_compare(&psi, -3, &c).unwrap() <= 1e-12);
        assert!(shift_compare(&psi, 64, &c).unwrap() <= 1e-10);
    }

    #[test]
    fn parseval() {
        let c = cfg(128);
        let f = Fourier::new(c);
        let psi = haar_state(128, &mut StreamFactory::new(72).stream(0));
        assert!((f.forward(psi.amplitudes()).norm() - 1.0).abs() < 1e-12);
        assert!((f.inverse(&f.forward(psi.amplitudes())) - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn canonical_defect_state_classes() {
        let c = LatticeConfig::default();
        let g = gaussian_packet(&c, 0.0, 8.0, 0.0).unwrap();
        let d = canonical_defect(&g, &c).unwrap();
        assert!(d <= 1e-6 * c.hbar, "{d}");
        let flat = StateVector::normalized(DVector::from_element(256, crate::opcore::c(1.0, 0.0))).unwrap();
        assert!(canonical_defect(&flat, &c).unwrap() > 0.5);
        let c2 = LatticeConfig::new(256, 1.0, 2.5).unwrap();
        let g2 = gaussian_packet(&c2, 0.0, 8.0, 0.0).unwrap();
        assert!((displacement_defect(&g2, &c2).unwrap() - canonical_defect(&g2, &c2).unwrap() / 2.5).abs() < 1e-15);
    }

    #[test]
    fn packet_validation() {
        let c = LatticeConfig::default();
        assert!(matches!(gaussian_packet(&c, 0.0, 0.5, 0.0), Err(Error::InvalidWidth { .. })));
        assert!(gaussian_packet(&c, 0.0, 64.0, 0.0).is_ok());
        assert!(gaussian_packet(&c, 0.0, 8.0, 4.0).is_err());
        let g = gaussian_packet(&c, 10.0, 8.0, 0.5).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        let (ex, _) = position_momentum(&g, &c).unwrap();
        assert!((ex - 10.0).abs() < 1e-9);
    }

    #[test]
    fn displaced_frames() {
        let c = LatticeConfig::default();
        let g = gaussian_packet(&c, -5.0, 8.0, 0.4).unwrap();
        for eps in [1.0, 7.0, -3.0, 2.5] {
            let (dx, dp) = displaced_frame_check(&g, eps, &c).unwrap();
            assert!(dx <= 1e-9 && dp <= 1e-9, "{eps}: {dx} {dp}");
        }
        assert_eq!(shifted_position_defect(&c, 0.37), 0.0);
    }

    #[test]
    fn fractional_shift_matches_interpolant() {
        let c = cfg(64);
        let g = gaussian_packet(&c, 0.0, 4.0, 0.3).unwrap();
        let f = Fourier::new(c);
        let eps = 0.37;
        let moved = f.displace(g.amplitudes(), eps);
        for n in [20, 31, 32, 40] {
            let want = band_limited_value(&g, &c, c.position(n) - eps);
            assert!((moved[n] - want).norm() < 1e-8);
        }
    }

    #[test]
    fn ehrenfest_rate_for_linear_hamiltonian() {
        let c = LatticeConfig::default();
        let g = gaussian_packet(&c, 0.0, 8.0, 0.2).unwrap();
        for (speed, dt) in [(1.0, 1e-3), (3.0, 0.5), (-2.0, 1.0)] {
            let r = ehrenfest_rate(&g, &c, speed, dt).unwrap();
            assert!((r - speed).abs() <= 1e-6 * speed.abs(), "{r}");
        }
        // first-order prediction through the generic dynamics routine
        let small = cfg(64);
        let g = gaussian_packet(&small, 0.0, 4.0, 0.0).unwrap();
        let h = lattice_momentum(&small).scale(2.0);
        let step = heisenberg_step_expectation(&lattice_position(&small), &h, &g, 1e-4, 1.0).unwrap();
        let x0 = expectation(&lattice_position(&small), &g).unwrap();
        assert!(((step.prediction - x0) / 1e-4 - 2.0).abs() < 1e-6);
    }
}
