//! Angular momentum in `N = 2j + 1` dimensions, rotation operators, and the
//! map `proj` from states to expectation 3-vectors.
//!
//! Sign convention: `exp(-i theta L_a / hbar)` acting on a state rotates its
//! expectation vector by `+theta` about `+a`, right-handed (active).

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::dynamics::propagator;
use crate::opcore::{c, check_dim, expectation, matrix_commutator, ComplexMatrix, HermitianOperator, StateVector};
use crate::Result;

pub type ExpectationVector3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AngularMomentumTriple {
    pub dim: usize,
    pub x: HermitianOperator,
    pub y: HermitianOperator,
    pub z: HermitianOperator,
    pub hbar: f64,
}

impl AngularMomentumTriple {
    pub fn j(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    pub fn component(&self, a: Axis) -> &HermitianOperator {
        match a {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    /// `L_x^2 + L_y^2 + L_z^2`
    pub fn casimir(&self) -> ComplexMatrix {
        let (x, y, z) = (self.x.matrix(), self.y.matrix(), self.z.matrix());
        x * x + y * y + z * z
    }

    /// `n . L` for a (not necessarily unit) vector `n`.
    pub fn along(&self, n: &Vector3<f64>) -> HermitianOperator {
        self.x.scale(n.x).add(&self.y.scale(n.y)).and_then(|s| s.add(&self.z.scale(n.z))).expect("same dimension")
    }
}

/// Ladder construction: `L_z = hbar diag(j, ..., -j)` and
/// `<m+1|L_+|m> = hbar sqrt(j(j+1) - m(m+1))`.
pub fn angular_momentum(n: usize, hbar: f64) -> AngularMomentumTriple {
    assert!(n >= 1, "angular momentum needs N >= 1");
    let j = (n as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    let mut lp = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        // |m(k)> -> |m(k) + 1> = |m(k-1)>
        let mk = m(k);
        lp[(k - 1, k)] = c(hbar * (j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let lm = lp.adjoint();
    let x = (&lp + &lm).scale(0.5);
    let y = (&lp - &lm) * c(0.0, -0.5);
    let z = HermitianOperator::diagonal(&(0..n).map(|k| hbar * m(k)).collect::<Vec<_>>());
    AngularMomentumTriple {
        dim: n,
        x: HermitianOperator::new(x).expect("hermitian by construction"),
        y: HermitianOperator::new(y).expect("hermitian by construction"),
        z,
        hbar,
    }
}

/// `R_a = L_a / hbar`
pub fn rotation_generator(axis: Axis, l: &AngularMomentumTriple) -> HermitianOperator {
    l.component(axis).scale(1.0 / l.hbar)
}

/// `exp(-i theta R_a)`
pub fn rotation_operator(axis: Axis, theta: f64, l: &AngularMomentumTriple) -> Result<ComplexMatrix> {
    propagator(&rotation_generator(axis, l), theta, 1.0)
}

pub fn proj(v: &StateVector, l: &AngularMomentumTriple) -> Result<ExpectationVector3> {
    check_dim(l.dim, v.dim())?;
    Ok(Vector3::new(expectation(&l.x, v)?, expectation(&l.y, v)?, expectation(&l.z, v)?))
}

/// Right-handed rotation by `theta` about a coordinate axis.
pub fn rotation3(axis: Axis, theta: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_unchecked(axis.unit()), theta).into_inner()
}

/// `|R_x(e) R_y(e) - R_y(e) R_x(e) - (R_z(e^2) - I)|`
pub fn so3_commutator_residual(eps: f64) -> f64 {
    let (rx, ry) = (rotation3(Axis::X, eps), rotation3(Axis::Y, eps));
    (rx * ry - ry * rx - (rotation3(Axis::Z, eps * eps) - Matrix3::identity())).norm()
}

/// `|proj(exp(-i theta R_z) v) - R_z(theta) proj(v)|`
pub fn proj_rotation_check(v: &StateVector, theta: f64, l: &AngularMomentumTriple) -> Result<f64> {
    let w = v.evolve(&rotation_operator(Axis::Z, theta, l)?)?;
    Ok((proj(&w, l)? - rotation3(Axis::Z, theta) * proj(v, l)?).norm())
}

/// The state-level form of the SO(3) commutator relation:
/// `|[proj(U1 U2 v) - proj(U2 U1 v)] - [proj(U3 v) - proj(v)]|` with
/// `U1 = exp(-i e R_x)`, `U2 = exp(-i e R_y)`, `U3 = exp(-i e^2 R_z)`.
pub fn first_order_rotation_check(v: &StateVector, eps: f64, l: &AngularMomentumTriple) -> Result<f64> {
    let u1 = rotation_operator(Axis::X, eps, l)?;
    let u2 = rotation_operator(Axis::Y, eps, l)?;
    let u3 = rotation_operator(Axis::Z, eps * eps, l)?;
    let p12 = proj(&v.evolve(&(&u1 * &u2))?, l)?;
    let p21 = proj(&v.evolve(&(&u2 * &u1))?, l)?;
    let p3 = proj(&v.evolve(&u3)?, l)?;
    Ok(((p12 - p21) - (p3 - proj(v, l)?)).norm())
}

/// `|exp(i theta R_z) L_x exp(-i theta R_z) - (cos theta L_x - sin theta L_y)|`
pub fn conjugation_residual(theta: f64, l: &AngularMomentumTriple) -> Result<f64> {
    let u = rotation_operator(Axis::Z, theta, l)?;
    let lhs = u.adjoint() * l.x.matrix() * &u;
    let rhs = l.x.matrix().scale(theta.cos()) - l.y.matrix().scale(theta.sin());
    Ok((lhs - rhs).norm())
}

/// Expectation trajectory under `H = -(q / 2m) B . L`.
pub fn precess(
    v0: &StateVector,
    b: &Vector3<f64>,
    q: f64,
    m: f64,
    times: &[f64],
    l: &AngularMomentumTriple,
) -> Result<Vec<ExpectationVector3>> {
    let h = l.along(&(b * (-q / (2.0 * m))));
    times.iter().map(|&t| proj(&v0.evolve(&propagator(&h, t, l.hbar)?)?, l)).collect()
}

/// Larmor angular frequency `|q B / 2m|`.
pub fn larmor_rate(b: &Vector3<f64>, q: f64, m: f64) -> f64 {
    (q * b.norm() / (2.0 * m)).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    /// Named residuals; each should vanish.
    pub residuals: Vec<(String, f64)>,
    /// `gamma_1..3` extracted as `tr(.) / N` of the combinations that the
    /// commutator-nesting identities force to be multiples of the identity.
    pub gammas: [f64; 3],
}

impl BracketReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

fn mat_of(l: &AngularMomentumTriple, a: Axis) -> &ComplexMatrix {
    l.component(a).matrix()
}

/// Residuals of the angular-momentum bracket identities for a triple:
/// the nested forms `[L_a, L_k + (i/hbar)[L_i, L_j]] = 0`, the extracted
/// constants `gamma`, the commutation relations, the generator relations
/// `[R_z, L_x] = i L_y`, `[R_z, L_y] = -i L_x`, `[R_z, L_z] = 0`, and
/// `L^2 = hbar^2 j (j+1)`.
pub fn bracket_defect_check(l: &AngularMomentumTriple) -> BracketReport {
    let n = l.dim;
    let h = l.hbar;
    let id = ComplexMatrix::identity(n, n);
    let ih = c(0.0, 1.0 / h);
    let mut residuals = Vec::new();
    let mut gammas = [0.0; 3];
    let cyc = [(Axis::X, Axis::Y, Axis::Z), (Axis::Y, Axis::Z, Axis::X), (Axis::Z, Axis::X, Axis::Y)];
    for (k, &(i, j, m)) in cyc.iter().enumerate() {
        let inner = mat_of(l, m) + matrix_commutator(mat_of(l, i), mat_of(l, j)) * ih;
        for a in Axis::ALL {
            let r = matrix_commutator(mat_of(l, a), &inner).norm();
            residuals.push((format!("[L{}, L{} + (i/hbar)[L{}, L{}]]", a.name(), m.name(), i.name(), j.name()), r));
        }
        let g = inner.trace() / c(n as f64, 0.0);
        gammas[k] = g.re;
        residuals.push((format!("gamma_{}", k + 1), g.norm()));
        residuals.push((format!("L{} + (i/hbar)[L{}, L{}] - gamma", m.name(), i.name(), j.name()), (inner - &id * g).norm()));
        let comm = matrix_commutator(mat_of(l, i), mat_of(l, j)) - mat_of(l, m) * c(0.0, h);
        residuals.push((format!("[L{}, L{}] - i hbar L{}", i.name(), j.name(), m.name()), comm.norm()));
    }
    let rz = rotation_generator(Axis::Z, l);
    let gen = [
        ("[Rz, Lx] - i Ly", matrix_commutator(rz.matrix(), l.x.matrix()) - l.y.matrix() * c(0.0, 1.0)),
        ("[Rz, Ly] + i Lx", matrix_commutator(rz.matrix(), l.y.matrix()) + l.x.matrix() * c(0.0, 1.0)),
        ("[Rz, Lz]", matrix_commutator(rz.matrix(), l.z.matrix())),
    ];
    for (name, m) in gen {
        residuals.push((name.to_string(), m.norm()));
    }
    let j = l.j();
    residuals.push(("L^2 - hbar^2 j(j+1)".into(), (l.casimir() - id * c(h * h * j * (j + 1.0), 0.0)).norm()));
    BracketReport { residuals, gammas }
}

/// First-order form of a short rotation: returns
/// `(|U - (I - i e R_a)|, e^2 |R_a|^2 / 2)`; the first never exceeds the
/// second. Norms are spectral.
pub fn first_order_unitary(axis: Axis, eps: f64, l: &AngularMomentumTriple) -> Result<(f64, f64)> {
    let r = rotation_generator(axis, l);
    let u = rotation_operator(axis, eps, l)?;
    let lin = ComplexMatrix::identity(l.dim, l.dim) - r.matrix() * c(0.0, eps);
    let rn = r.matrix().clone().singular_values().max();
    Ok(((u - lin).singular_values().max(), eps * eps * rn * rn / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::loglog_slope;
    use crate::opcore::haar_state;
    use crate::StreamFactory;
    use std::f64::consts::PI;

    #[test]
    fn spin_half_is_half_pauli() {
        let h = 1.7;
        let l = angular_momentum(2, h);
        for (a, p) in [(&l.x, HermitianOperator::pauli_x()), (&l.y, HermitianOperator::pauli_y()), (&l.z, HermitianOperator::pauli_z())] {
            assert!((a.matrix() - p.matrix().scale(h / 2.0)).norm() < 1e-15);
        }
        let r = rotation_generator(Axis::Z, &l);
        assert!((r.matrix() - HermitianOperator::pauli_z().matrix().scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn small_dimensions() {
        let l = angular_momentum(3, 1.0);
        let ev = l.z.spectrum().unwrap().eigenvalues;
        assert_eq!(ev, vec![-1.0, 0.0, 1.0]);
        let l = angular_momentum(1, 1.0);
        assert_eq!(l.x.norm() + l.y.norm() + l.z.norm(), 0.0);
        assert_eq!(proj(&StateVector::basis(1, 0), &l).unwrap(), Vector3::zeros());
    }

    #[test]
    fn triple_invariants_up_to_eight() {
        for n in 1..=8 {
            let h = 0.9;
            let l = angular_momentum(n, h);
            let rep = bracket_defect_check(&l);
            let j = l.j().max(0.5);
            assert!(rep.max_residual() <= 1e-12 * h * h * j * j * 10.0, "N = {n}: {:?}", rep.residuals);
            assert_eq!(rep.gammas.map(|g| g.abs() < 1e-12), [true; 3]);
        }
    }

    #[test]
    fn proj_examples() {
        let l = angular_momentum(2, 1.0);
        assert!((proj(&StateVector::basis(2, 0), &l).unwrap() - Vector3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
        let s = 0.5f64.sqrt();
        let plus = StateVector::from_reals(&[s, s]).unwrap();
        assert!((proj(&plus, &l).unwrap() - Vector3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert!(proj(&StateVector::basis(3, 0), &l).is_err());
        let moved = plus.evolve(&rotation_operator(Axis::Z, PI / 2.0, &l).unwrap()).unwrap();
        assert!((proj(&moved, &l).unwrap() - Vector3::new(0.0, 0.5, 0.0)).norm() < 1e-12);
        for t in [0.0, 0.4, 2.0] {
            assert!(proj_rotation_check(&StateVector::basis(2, 0), t, &l).unwrap() < 1e-12);
        }
    }

    #[test]
    fn so3_residual_is_cubic() {
        assert_eq!(so3_commutator_residual(0.0), 0.0);
        assert!(so3_commutator_residual(1e-3) <= 10.0 * 1e-9);
        let eps = [1e-1, 3e-2, 1e-2, 3e-3];
        let r: Vec<f64> = eps.iter().map(|&e| so3_commutator_residual(e)).collect();
        let slope = loglog_slope(&eps, &r);
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn rotations_act_on_proj() {
        let f = StreamFactory::new(61);
        for n in 2..=5 {
            let l = angular_momentum(n, 1.0);
            let mut rng = f.stream(n as u64);
            for _ in 0..20 {
                let v = haar_state(n, &mut rng);
                for t in [0.1, 1.0, PI] {
                    assert!(proj_rotation_check(&v, t, &l).unwrap() <= 1e-11);
                }
            }
            for t in [0.3, 2.5] {
                assert!(conjugation_residual(t, &l).unwrap() <= 1e-11);
            }
        }
    }

    #[test]
    fn commutator_of_small_rotations_on_states() {
        let l = angular_momentum(3, 1.0);
        let v = haar_state(3, &mut StreamFactory::new(62).stream(0));
        let eps = [1e-1, 3e-2, 1e-2];
        let r: Vec<f64> = eps.iter().map(|&e| first_order_rotation_check(&v, e, &l).unwrap()).collect();
        assert!(loglog_slope(&eps, &r) >= 2.7, "{r:?}");
    }

    #[test]
    fn larmor_precession() {
        let l = angular_momentum(2, 1.0);
        let s = 0.5f64.sqrt();
        let plus = StateVector::from_reals(&[s, s]).unwrap();
        let b = Vector3::new(0.0, 0.0, 2.0);
        let (q, m) = (1.5, 0.5);
        let w = larmor_rate(&b, q, m);
        let period = 2.0 * PI / w;
        let times: Vec<f64> = (0..=40).map(|k| period * k as f64 / 40.0).collect();
        let path = precess(&plus, &b, q, m, &times, &l).unwrap();
        for p in &path {
            assert!((p.xy().norm() - 0.5).abs() < 1e-12 && p.z.abs() < 1e-12);
        }
        assert!((path[40] - path[0]).norm() <= 1e-10);
        let up = StateVector::basis(2, 0);
        for p in precess(&up, &b, q, m, &times, &l).unwrap() {
            assert!((p - Vector3::new(0.0, 0.0, 0.5)).norm() < 1e-12);
        }
        for p in precess(&plus, &Vector3::zeros(), q, m, &times, &l).unwrap() {
            assert!((p - path[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn short_rotations_are_first_order() {
        let l = angular_momentum(4, 1.0);
        for a in Axis::ALL {
            for e in [1e-1, 1e-2, 1e-3] {
                let (err, bound) = first_order_unitary(a, e, &l).unwrap();
                assert!(err <= bound * (1.0 + 1e-9), "{err} > {bound}");
            }
        }
    }
}
