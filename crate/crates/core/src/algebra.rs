//! Lie algebra and group structure of g = R x_θ R² and its simply connected group.
//!
//! Every class is determined by a 2x2 matrix θ; the kernels ρ_s = e^{sθ} and
//! Λ_s = ∫_0^s ρ_r dr are evaluated in closed form.

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Below this |s| the exponential map uses its first-order limit.
pub const EXP_SMALL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("{kind:?} requires lambda")]
    MissingLambda { kind: GroupKind },
    #[error("{kind:?} requires n")]
    MissingN { kind: GroupKind },
    #[error("{kind:?} takes no {param}")]
    UnexpectedParameter { kind: GroupKind, param: &'static str },
    #[error("invalid lambda {lambda} for {kind:?}")]
    InvalidLambda { kind: GroupKind, lambda: f64 },
    #[error("invalid n {n}, expected n >= 1")]
    InvalidN { n: u32 },
    #[error("class mismatch: {left} vs {right}")]
    ClassMismatch { left: GroupClass, right: GroupClass },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    R2Tilde,
    R2,
    R3,
    R3Lambda,
    R3PrimeLambda,
    ETilde,
    En,
}

impl GroupKind {
    pub const ALL: [GroupKind; 7] = [
        GroupKind::R2Tilde,
        GroupKind::R2,
        GroupKind::R3,
        GroupKind::R3Lambda,
        GroupKind::R3PrimeLambda,
        GroupKind::ETilde,
        GroupKind::En,
    ];

    pub fn takes_lambda(self) -> bool {
        matches!(self, GroupKind::R3Lambda | GroupKind::R3PrimeLambda)
    }

    pub fn is_euclidean(self) -> bool {
        matches!(self, GroupKind::ETilde | GroupKind::En)
    }
}

/// A group class together with its parameter (λ for the R3 families, n for E_n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupClass {
    kind: GroupKind,
    lambda: Option<f64>,
    n: Option<u32>,
}

impl std::fmt::Display for GroupClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.lambda, self.n) {
            (Some(l), _) => write!(f, "{:?}({})", self.kind, l),
            (_, Some(n)) => write!(f, "E{}", n),
            _ => write!(f, "{:?}", self.kind),
        }
    }
}

impl GroupClass {
    pub const R2TILDE: GroupClass = GroupClass { kind: GroupKind::R2Tilde, lambda: None, n: None };
    pub const R2: GroupClass = GroupClass { kind: GroupKind::R2, lambda: None, n: None };
    pub const R3: GroupClass = GroupClass { kind: GroupKind::R3, lambda: None, n: None };
    pub const ETILDE: GroupClass = GroupClass { kind: GroupKind::ETilde, lambda: None, n: None };

    pub fn new(kind: GroupKind, lambda: Option<f64>, n: Option<u32>) -> Result<Self, AlgebraError> {
        if kind.takes_lambda() {
            let l = lambda.ok_or(AlgebraError::MissingLambda { kind })?;
            let ok = match kind {
                GroupKind::R3Lambda => l.is_finite() && l != 0.0 && l.abs() <= 1.0,
                _ => l.is_finite() && l != 0.0,
            };
            if !ok {
                return Err(AlgebraError::InvalidLambda { kind, lambda: l });
            }
        } else if lambda.is_some() {
            return Err(AlgebraError::UnexpectedParameter { kind, param: "lambda" });
        }
        if kind == GroupKind::En {
            let n = n.ok_or(AlgebraError::MissingN { kind })?;
            if n == 0 {
                return Err(AlgebraError::InvalidN { n });
            }
        } else if n.is_some() {
            return Err(AlgebraError::UnexpectedParameter { kind, param: "n" });
        }
        Ok(GroupClass { kind, lambda, n })
    }

    pub fn r3_lambda(lambda: f64) -> Result<Self, AlgebraError> {
        Self::new(GroupKind::R3Lambda, Some(lambda), None)
    }

    pub fn r3_prime(lambda: f64) -> Result<Self, AlgebraError> {
        Self::new(GroupKind::R3PrimeLambda, Some(lambda), None)
    }

    pub fn e_n(n: u32) -> Result<Self, AlgebraError> {
        Self::new(GroupKind::En, None, Some(n))
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn n(&self) -> Option<u32> {
        self.n
    }

    /// R3_λ with λ = 1, where θ is the identity.
    pub fn is_r3_one(&self) -> bool {
        self.kind == GroupKind::R3Lambda && self.lambda == Some(1.0)
    }

    pub fn is_quotient(&self) -> bool {
        matches!(self.kind, GroupKind::R2 | GroupKind::En)
    }

    pub fn theta(&self) -> Mat2 {
        match self.kind {
            GroupKind::R2Tilde | GroupKind::R2 => Mat2::new(0.0, 0.0, 0.0, 1.0),
            GroupKind::R3 => Mat2::new(1.0, 1.0, 0.0, 1.0),
            GroupKind::R3Lambda => Mat2::new(1.0, 0.0, 0.0, self.lambda.unwrap_or(1.0)),
            GroupKind::R3PrimeLambda => {
                let l = self.lambda.unwrap_or(1.0);
                Mat2::new(l, -1.0, 1.0, l)
            }
            GroupKind::ETilde | GroupKind::En => Mat2::new(0.0, -1.0, 1.0, 0.0),
        }
    }

    /// Map (t, v) to the canonical representative of its class in the quotient.
    pub fn canonicalize(&self, t: f64, v: Vec2) -> (f64, Vec2) {
        match self.kind {
            GroupKind::En => (wrap(t, PI * self.n.unwrap_or(1) as f64), v),
            GroupKind::R2 => (t, Vec2::new(wrap(v.x, PI), v.y)),
            _ => (t, v),
        }
    }
}

/// Representative of x modulo 2h in (-h, h].
pub fn wrap(x: f64, h: f64) -> f64 {
    if x > -h && x <= h {
        return x;
    }
    let p = 2.0 * h;
    let r = (x + h).rem_euclid(p) - h;
    if r <= -h {
        r + p
    } else {
        r
    }
}

/// ρ_s and Λ_s at a fixed s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowKernel {
    pub s: f64,
    pub rho: Mat2,
    pub lam: Mat2,
}

/// e^z - 1 without cancellation near z = 0.
pub fn complex_expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let em = x.exp_m1();
    let half = (0.5 * y).sin();
    let re = em * y.cos() - 2.0 * half * half;
    let im = x.exp() * y.sin();
    Complex64::new(re, im)
}

fn complex_mat(c: Complex64) -> Mat2 {
    Mat2::new(c.re, -c.im, c.im, c.re)
}

/// s·e^s - (e^s - 1), by series for small |s|.
fn r3_offdiag(s: f64) -> f64 {
    if s.abs() < 0.5 {
        // Σ_{k>=2} s^k (k-1)/k!
        let mut term = s; // s^k / k! at k = 1
        let mut acc = 0.0;
        for k in 2..30 {
            term *= s / k as f64;
            acc += term * (k - 1) as f64;
        }
        acc
    } else {
        s * s.exp() - s.exp_m1()
    }
}

pub fn kernels(class: GroupClass, s: f64) -> FlowKernel {
    let (rho, lam) = match class.kind {
        GroupKind::R2Tilde | GroupKind::R2 => (
            Mat2::new(1.0, 0.0, 0.0, s.exp()),
            Mat2::new(s, 0.0, 0.0, s.exp_m1()),
        ),
        GroupKind::R3 => {
            let e = s.exp();
            let em = s.exp_m1();
            (Mat2::new(e, s * e, 0.0, e), Mat2::new(em, r3_offdiag(s), 0.0, em))
        }
        GroupKind::R3Lambda => {
            let l = class.lambda.unwrap_or(1.0);
            (
                Mat2::new(s.exp(), 0.0, 0.0, (l * s).exp()),
                Mat2::new(s.exp_m1(), 0.0, 0.0, (l * s).exp_m1() / l),
            )
        }
        GroupKind::R3PrimeLambda | GroupKind::ETilde | GroupKind::En => {
            let l = if class.kind == GroupKind::R3PrimeLambda { class.lambda.unwrap_or(1.0) } else { 0.0 };
            let z = Complex64::new(l, 1.0);
            let zs = z * s;
            let rho = complex_mat(zs.exp());
            let lam = complex_mat(complex_expm1(zs) / z);
            (rho, lam)
        }
    };
    FlowKernel { s, rho, lam }
}

/// An element (a, w) of g in the basis {E0, e1, e2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement {
    pub a: f64,
    pub w: Vec2,
}

impl AlgebraElement {
    pub fn new(a: f64, w1: f64, w2: f64) -> Self {
        AlgebraElement { a, w: Vec2::new(w1, w2) }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn to_vec3(&self) -> Vector3<f64> {
        Vector3::new(self.a, self.w.x, self.w.y)
    }

    pub fn from_vec3(x: &Vector3<f64>) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn norm(&self) -> f64 {
        self.to_vec3().norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        AlgebraElement { a: c * self.a, w: self.w * c }
    }

    pub fn add(&self, o: &Self) -> Self {
        AlgebraElement { a: self.a + o.a, w: self.w + o.w }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AlgebraElement { a: self.a - o.a, w: self.w - o.w }
    }
}

pub fn bracket(class: GroupClass, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let th = class.theta();
    AlgebraElement { a: 0.0, w: th * y.w * x.a - th * x.w * y.a }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub t: f64,
    pub v: Vec2,
    pub class: GroupClass,
}

impl GroupElement {
    /// Builds an element already reduced to its canonical representative.
    pub fn new(class: GroupClass, t: f64, v: Vec2) -> Self {
        let (t, v) = class.canonicalize(t, v);
        GroupElement { t, v, class }
    }

    pub fn identity(class: GroupClass) -> Self {
        GroupElement { t: 0.0, v: Vec2::zeros(), class }
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement, AlgebraError> {
        group_mul(self, other)
    }

    pub fn inv(&self) -> GroupElement {
        group_inv(self)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.t, self.v.x, self.v.y]
    }
}

pub fn group_mul(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement, AlgebraError> {
    if g1.class != g2.class {
        return Err(AlgebraError::ClassMismatch { left: g1.class, right: g2.class });
    }
    let k = kernels(g1.class, g1.t);
    Ok(GroupElement::new(g1.class, g1.t + g2.t, g1.v + k.rho * g2.v))
}

pub fn group_inv(g: &GroupElement) -> GroupElement {
    let k = kernels(g.class, -g.t);
    GroupElement::new(g.class, -g.t, -(k.rho * g.v))
}

pub fn exp_map(class: GroupClass, x: &AlgebraElement) -> GroupElement {
    let s = x.a;
    let v = if s == 0.0 {
        x.w
    } else if s.abs() < EXP_SMALL {
        x.w + class.theta() * x.w * (0.5 * s)
    } else {
        kernels(class, s).lam * x.w / s
    };
    GroupElement::new(class, s, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Value at g of the left- or right-invariant field generated by y, in (t, v) coordinates.
pub fn invariant_field(class: GroupClass, y: &AlgebraElement, g: &GroupElement, side: Side) -> AlgebraElement {
    match side {
        Side::Left => AlgebraElement { a: y.a, w: kernels(class, g.t).rho * y.w },
        Side::Right => AlgebraElement { a: y.a, w: y.w + class.theta() * g.v * y.a },
    }
}
