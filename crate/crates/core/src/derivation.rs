//! Derivations D of g given by (D*, ξ), their spectra and the g⁺ ⊕ g⁰ ⊕ g⁻ splitting.

use crate::algebra::{bracket, AlgebraElement, GroupClass, GroupKind, Mat2, Vec2};
use nalgebra::Matrix3;
use num_complex::Complex64;
use thiserror::Error;

/// Absolute tolerance on eigenvalue real parts when sorting into g⁺, g⁰, g⁻.
pub const EIG_TOL: f64 = 1e-9;
/// Entries of D* below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Bracket norm threshold for abelian tests.
pub const BRACKET_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DerivationError {
    #[error("D* does not commute with θ (residual {residual:e})")]
    CommutationViolation { residual: f64 },
    #[error("derivation is zero")]
    ZeroDerivation,
    #[error("D* e1 = ({0}, {1}) must vanish for the field to descend to R2")]
    QuotientViolation(f64, f64),
    #[error("non-finite entry in derivation")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivation {
    pub class: GroupClass,
    pub dstar: Mat2,
    pub xi: Vec2,
}

pub fn make_derivation(class: GroupClass, dstar: Mat2, xi: Vec2) -> Result<Derivation, DerivationError> {
    if dstar.iter().chain(xi.iter()).any(|x| !x.is_finite()) {
        return Err(DerivationError::NonFinite);
    }
    let th = class.theta();
    let residual = (dstar * th - th * dstar).norm();
    if residual > ZERO_TOL * dstar.norm().max(1.0) {
        return Err(DerivationError::CommutationViolation { residual });
    }
    if matches!(class.kind(), GroupKind::R3PrimeLambda | GroupKind::ETilde | GroupKind::En) {
        let tol = ZERO_TOL * dstar.norm().max(1.0);
        assert!(
            (dstar[(0, 0)] - dstar[(1, 1)]).abs() <= tol && (dstar[(0, 1)] + dstar[(1, 0)]).abs() <= tol,
            "commuting D* must be a scaled rotation"
        );
    }
    if dstar.iter().all(|x| *x == 0.0) && xi.iter().all(|x| *x == 0.0) {
        return Err(DerivationError::ZeroDerivation);
    }
    if class.kind() == GroupKind::R2 {
        let c = dstar.column(0);
        if c.norm() > ZERO_TOL {
            return Err(DerivationError::QuotientViolation(c[0], c[1]));
        }
    }
    Ok(Derivation { class, dstar, xi })
}

pub fn apply_derivation(d: &Derivation, x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement { a: 0.0, w: d.xi * x.a + d.dstar * x.w }
}

impl Derivation {
    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        apply_derivation(self, x)
    }

    /// Matrix of D in the basis {E0, e1, e2}.
    pub fn matrix3(&self) -> Matrix3<f64> {
        let (m, x) = (&self.dstar, &self.xi);
        Matrix3::new(0.0, 0.0, 0.0, x[0], m[(0, 0)], m[(0, 1)], x[1], m[(1, 0)], m[(1, 1)])
    }

    /// α, β of D* = [[α, −β], [β, α]].
    pub fn alpha_beta(&self) -> (f64, f64) {
        (self.dstar[(0, 0)], self.dstar[(1, 0)])
    }

    pub fn dstar_zero(&self) -> bool {
        self.dstar.iter().all(|x| x.abs() <= ZERO_TOL)
    }
}

/// Eigenvalues of a real 2x2 matrix in closed form.
pub fn eig2(m: &Mat2) -> [Complex64; 2] {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    // discriminant written to avoid cancellation when the diagonal dominates
    let hd = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let disc = hd * hd + m[(0, 1)] * m[(1, 0)];
    if disc >= 0.0 {
        let r = disc.sqrt();
        let q = if half_tr >= 0.0 { half_tr + r } else { half_tr - r };
        let other = if q != 0.0 { det / q } else { 0.0 };
        let (a, b) = if q <= other { (q, other) } else { (other, q) };
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half_tr, -r), Complex64::new(half_tr, r)]
    }
}

fn sign_class(re: f64) -> i8 {
    if re > EIG_TOL {
        1
    } else if re < -EIG_TOL {
        -1
    } else {
        0
    }
}

/// Unit vector spanning the kernel of a rank-one 2x2 matrix.
fn null_vector(m: &Mat2) -> Vec2 {
    let r0 = Vec2::new(m[(0, 0)], m[(0, 1)]);
    let r1 = Vec2::new(m[(1, 0)], m[(1, 1)]);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    if r.norm() == 0.0 {
        return Vec2::new(1.0, 0.0);
    }
    Vec2::new(-r.y, r.x).normalize()
}

fn nil(w: Vec2) -> AlgebraElement {
    AlgebraElement { a: 0.0, w }
}

fn e1() -> AlgebraElement {
    AlgebraElement::new(0.0, 1.0, 0.0)
}

fn e2() -> AlgebraElement {
    AlgebraElement::new(0.0, 0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub gplus: Vec<AlgebraElement>,
    pub gzero: Vec<AlgebraElement>,
    pub gminus: Vec<AlgebraElement>,
    pub gzero_dim: usize,
    pub gzero_abelian: bool,
    pub spectrum: Vec<Complex64>,
}

pub fn decompose(d: &Derivation) -> Decomposition {
    let ev = eig2(&d.dstar);
    let mut gplus = Vec::new();
    let mut gminus = Vec::new();
    let gzero;
    let all = vec![AlgebraElement::new(1.0, 0.0, 0.0), e1(), e2()];
    let c0 = sign_class(ev[0].re);
    let c1 = sign_class(ev[1].re);
    let push = |side: i8, v: AlgebraElement, p: &mut Vec<AlgebraElement>, m: &mut Vec<AlgebraElement>| {
        if side > 0 {
            p.push(v)
        } else {
            m.push(v)
        }
    };
    if c0 == c1 {
        if c0 == 0 {
            gzero = all;
        } else {
            push(c0, e1(), &mut gplus, &mut gminus);
            push(c0, e2(), &mut gplus, &mut gminus);
            let v = -d.dstar.try_inverse().expect("no zero eigenvalue") * d.xi;
            gzero = vec![AlgebraElement { a: 1.0, w: v }];
        }
    } else {
        // distinct real eigenvalues with different sign classes
        let (mu0, mu1) = (ev[0].re, ev[1].re);
        let n0 = null_vector(&(d.dstar - Mat2::identity() * mu0));
        let n1 = null_vector(&(d.dstar - Mat2::identity() * mu1));
        if c0 == 0 || c1 == 0 {
            let (k, n, mu, cn) = if c0 == 0 { (n0, n1, mu1, c1) } else { (n1, n0, mu0, c0) };
            push(cn, nil(n), &mut gplus, &mut gminus);
            let basis = Mat2::from_columns(&[n, k]);
            let coef = basis.try_inverse().expect("distinct eigenvectors") * d.xi;
            gzero = vec![AlgebraElement { a: 1.0, w: -n * (coef[0] / mu) }, nil(k)];
        } else {
            push(c0, nil(n0), &mut gplus, &mut gminus);
            push(c1, nil(n1), &mut gplus, &mut gminus);
            let v = -d.dstar.try_inverse().expect("no zero eigenvalue") * d.xi;
            gzero = vec![AlgebraElement { a: 1.0, w: v }];
        }
    }
    let gzero_abelian = match gzero.len() {
        3 => false,
        1 => true,
        _ => {
            let a = gzero[0].scale(1.0 / gzero[0].norm());
            let b = gzero[1].scale(1.0 / gzero[1].norm());
            bracket(d.class, &a, &b).norm() <= BRACKET_TOL
        }
    };
    let mut spectrum = vec![Complex64::new(0.0, 0.0), ev[0], ev[1]];
    spectrum.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Decomposition { gzero_dim: gzero.len(), gplus, gzero, gminus, gzero_abelian, spectrum }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralPredicates {
    pub dstar_invertible: bool,
    pub dstar_zero: bool,
    pub complex_pair: bool,
    pub g_equals_g0: bool,
    pub g0_is_aff: bool,
    pub gzero_dim: usize,
    pub ker_dstar_basis: Vec<Vec2>,
}

pub fn structural_predicates(d: &Derivation) -> StructuralPredicates {
    let dec = decompose(d);
    let ev = eig2(&d.dstar);
    let complex_pair = ev[0].im.abs() > EIG_TOL;
    let dstar_zero = d.dstar_zero();
    let ker_dstar_basis = if dstar_zero {
        vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
    } else if !complex_pair && ev.iter().any(|e| e.re.abs() <= EIG_TOL) {
        vec![null_vector(&d.dstar)]
    } else {
        Vec::new()
    };
    StructuralPredicates {
        dstar_invertible: ker_dstar_basis.is_empty(),
        dstar_zero,
        complex_pair,
        g_equals_g0: dec.gzero_dim == 3,
        g0_is_aff: dec.gzero_dim == 2 && !dec.gzero_abelian,
        gzero_dim: dec.gzero_dim,
        ker_dstar_basis,
    }
}
