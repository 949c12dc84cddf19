use super::plane_f;
use crate::algebra::{kernels, GroupClass, GroupElement, Mat2, Vec2};
use crate::derivation::{eig2, EIG_TOL};
use crate::system::{LinearSystem, Normalized};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EIGVEC_TOL: f64 = 1e-10;
/// Sign-definiteness of a monotone drift is verified on this t-range.
pub const VERIFY_RANGE: f64 = 20.0;
const VERIFY_POINTS: usize = 4001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("barrier certificates apply only to LARC systems decided not controllable")]
    NotApplicable,
    #[error("no catalogued barrier applies")]
    NoCertificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    HalfPlaneF,
    MonotoneCoordinate,
    ExpandingDisk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    /// ξ of the normalized system.
    pub xi: [f64; 2],
    pub dstar: [[f64; 2]; 2],
    /// v0 of the normalizing automorphism ψ(t,v) = (t, v − Λ_t v0).
    pub offset: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ell: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub center: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v0: Option<[f64; 2]>,
}

/// A functional f on G with σ·f monotone (MonotoneCoordinate) or with
/// {σ(f − level) ≥ 0} forward invariant (HalfPlaneF, ExpandingDisk).
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierCertificate {
    pub kind: CertificateKind,
    pub direction: f64,
    pub level: f64,
    pub params: CertificateParams,
    pub class: GroupClass,
}

fn arr(v: &Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn vec(a: &[f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

impl BarrierCertificate {
    fn dstar(&self) -> Mat2 {
        let d = &self.params.dstar;
        Mat2::new(d[0][0], d[0][1], d[1][0], d[1][1])
    }

    /// Coordinates after the normalizing automorphism.
    fn normalized(&self, g: &GroupElement) -> Vec2 {
        g.v - kernels(self.class, g.t).lam * vec(&self.params.offset)
    }

    pub fn evaluate(&self, g: &GroupElement) -> f64 {
        let v = self.normalized(g);
        let xi = vec(&self.params.xi);
        match self.kind {
            CertificateKind::HalfPlaneF => {
                vec(self.params.ell.as_ref().expect("ell")).dot(&plane_f(self.class, &self.dstar(), &xi, g.t, &v))
            }
            CertificateKind::ExpandingDisk => {
                let p = plane_f(self.class, &self.dstar(), &xi, g.t, &v);
                (p - vec(self.params.center.as_ref().expect("center"))).norm_squared()
            }
            CertificateKind::MonotoneCoordinate => v.dot(&vec(self.params.v0.as_ref().expect("v0"))),
        }
    }

    pub fn is_region(&self) -> bool {
        self.kind != CertificateKind::MonotoneCoordinate
    }

    /// The same functional with the opposite orientation (not a valid certificate).
    pub fn flipped(&self) -> Self {
        let mut c = self.clone();
        c.direction = -c.direction;
        c
    }

    /// A point on the boundary of the invariant region (identity for monotone ones).
    pub fn boundary_point(&self) -> GroupElement {
        let d = self.dstar();
        let v = match self.kind {
            CertificateKind::MonotoneCoordinate => return GroupElement::identity(self.class),
            CertificateKind::HalfPlaneF => {
                let ell = vec(self.params.ell.as_ref().expect("ell"));
                let mu = self.params.mu.expect("mu");
                ell * (self.level / (mu * ell.norm_squared()))
            }
            CertificateKind::ExpandingDisk => {
                // farthest point from the disk where the drift of f vanishes
                let c = vec(self.params.center.as_ref().expect("center"));
                let (a, b) = (self.params.alpha.expect("alpha"), self.params.beta.expect("beta"));
                let xi = vec(&self.params.xi);
                let k = Vec2::new(-(b * xi.x - a * xi.y) / (2.0 * a), -(b * xi.y + a * xi.x) / (2.0 * a));
                let dir = if (c - k).norm() > 0.0 { (c - k).normalize() } else { Vec2::new(1.0, 0.0) };
                let p = c + dir * self.level.sqrt();
                d.try_inverse().expect("invertible D*") * p
            }
        };
        // t = 0, where ψ is the identity on v
        GroupElement::new(self.class, 0.0, v)
    }
}

pub fn barrier_certificate(system: &LinearSystem) -> Result<BarrierCertificate, CertificateError> {
    let v = super::decide(system);
    if v.controllable || !v.analysis.inputs.larc {
        return Err(CertificateError::NotApplicable);
    }
    v.certificate.ok_or(CertificateError::NoCertificate)
}

pub(super) fn find_certificate(original: &LinearSystem, n: &Normalized) -> Result<BarrierCertificate, CertificateError> {
    let s = &n.system;
    let d = &s.deriv;
    let class = s.class;
    let extra: Vec<Vec2> = s.controls.iter().skip(1).map(|c| c.w).collect();
    let params = CertificateParams {
        xi: arr(&d.xi),
        dstar: [[d.dstar[(0, 0)], d.dstar[(0, 1)]], [d.dstar[(1, 0)], d.dstar[(1, 1)]]],
        offset: arr(&n.offset),
        lambda: class.lambda(),
        ell: None,
        kappa: None,
        mu: None,
        alpha: None,
        beta: None,
        center: None,
        v0: None,
    };
    debug_assert_eq!(original.class, class);
    if d.dstar_zero() {
        return monotone(class, &d.xi, &extra, params);
    }
    if let Some(c) = half_plane(class, &d.dstar, &d.xi, &extra, params.clone()) {
        return Ok(c);
    }
    if class.kind().is_euclidean() && extra.is_empty() {
        let (a, b) = (d.dstar[(0, 0)], d.dstar[(1, 0)]);
        if a.abs() > EIG_TOL {
            let xi = d.xi;
            let c = Vec2::new(xi.y, -xi.x);
            let k = Vec2::new(-(b * xi.x - a * xi.y) / (2.0 * a), -(b * xi.y + a * xi.x) / (2.0 * a));
            let r = (a * a + b * b).sqrt() * xi.norm() / (2.0 * a.abs());
            let big_r = (k - c).norm() + r;
            return Ok(BarrierCertificate {
                kind: CertificateKind::ExpandingDisk,
                direction: a.signum(),
                level: big_r * big_r,
                params: CertificateParams { alpha: Some(a), beta: Some(b), center: Some(arr(&c)), ..params },
                class,
            });
        }
    }
    Err(CertificateError::NoCertificate)
}

/// Unit left eigenvectors of a real 2x2 matrix with real spectrum.
fn left_eigvecs(m: &Mat2) -> Vec<Vec2> {
    let ev = eig2(m);
    if ev[0].im != 0.0 {
        return Vec::new();
    }
    let mt = m.transpose();
    let mut out = Vec::new();
    for e in ev {
        let a = mt - Mat2::identity() * e.re;
        let r0 = Vec2::new(a[(0, 0)], a[(0, 1)]);
        let r1 = Vec2::new(a[(1, 0)], a[(1, 1)]);
        let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
        if r.norm() > 0.0 {
            out.push(Vec2::new(-r.y, r.x).normalize());
        }
    }
    out
}

fn left_eigenvalue(m: &Mat2, ell: &Vec2) -> Option<f64> {
    let k = ell.dot(&(m * ell));
    let res = (m.transpose() * ell - ell * k).norm();
    (res <= EIGVEC_TOL * m.norm().max(1.0)).then_some(k)
}

fn half_plane(class: GroupClass, dstar: &Mat2, xi: &Vec2, extra: &[Vec2], params: CertificateParams) -> Option<BarrierCertificate> {
    let theta = class.theta();
    let mut cands = vec![Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)];
    cands.extend(left_eigvecs(dstar));
    cands.extend(left_eigvecs(&theta));
    cands.extend(extra.iter().filter(|w| w.norm() > 0.0).map(|w| Vec2::new(-w.y, w.x).normalize()));
    let mut best: Option<(bool, BarrierCertificate)> = None;
    for ell in cands {
        let (Some(kappa), Some(mu)) = (left_eigenvalue(&theta, &ell), left_eigenvalue(dstar, &ell)) else {
            continue;
        };
        if kappa.abs() <= EIG_TOL || mu.abs() <= EIG_TOL {
            continue;
        }
        if extra.iter().any(|w| ell.dot(w).abs() > EIGVEC_TOL * w.norm()) {
            continue;
        }
        let level = ell.dot(xi) / kappa;
        if level == 0.0 {
            continue;
        }
        let direction = (mu * level).signum();
        let contains_identity = direction * (0.0 - level) >= 0.0;
        let cert = BarrierCertificate {
            kind: CertificateKind::HalfPlaneF,
            direction,
            level,
            params: CertificateParams { ell: Some(arr(&ell)), kappa: Some(kappa), mu: Some(mu), ..params.clone() },
            class,
        };
        match &best {
            Some((true, _)) => {}
            Some((false, _)) if !contains_identity => {}
            _ => best = Some((contains_identity, cert)),
        }
    }
    best.map(|(_, c)| c)
}

/// Drift of z = <v, v0> for D* = 0: <Λ_t ξ, v0>, checked sign-definite on a grid.
fn verify_monotone(class: GroupClass, xi: &Vec2, extra: &[Vec2], v0: &Vec2) -> Option<f64> {
    let mut sign = 0.0f64;
    let mut peak = 0.0f64;
    let mut samples = Vec::with_capacity(VERIFY_POINTS);
    for i in 0..VERIFY_POINTS {
        let t = -VERIFY_RANGE + 2.0 * VERIFY_RANGE * i as f64 / (VERIFY_POINTS - 1) as f64;
        let k = kernels(class, t);
        let lx = k.lam * xi;
        for w in extra {
            let rw = k.rho * w;
            if rw.dot(v0).abs() > 1e-9 * rw.norm() * v0.norm() {
                return None;
            }
        }
        let h = lx.dot(v0);
        if h.abs() > peak {
            peak = h.abs();
            sign = h.signum();
        }
        samples.push((h, lx.norm() * v0.norm()));
    }
    if peak <= 1e-9 {
        return None;
    }
    samples.iter().all(|(h, scale)| sign * h >= -1e-9 * (1.0 + scale)).then_some(sign)
}

fn monotone(class: GroupClass, xi: &Vec2, extra: &[Vec2], params: CertificateParams) -> Result<BarrierCertificate, CertificateError> {
    let theta = class.theta();
    let l = class.lambda().unwrap_or(1.0);
    let (x1, x2) = (xi.x, xi.y);
    let rot = |w: Vec2| Vec2::new(-w.y, w.x);
    let mut cands = vec![
        theta * xi,
        Vec2::new(1.0 / x1, -1.0 / x2),
        Vec2::new(x2, -x1),
        Vec2::new(l / x1, -l / x2),
    ];
    let paper_w0 = [
        Vec2::new(-1.0 / x2, 1.0 / x1),
        Vec2::new(1.0 / x2, 1.0 / x1),
        *xi,
        theta.try_inverse().map_or(*xi, |ti| ti * xi),
        Vec2::new(l / x2, l / x1),
    ];
    cands.extend(paper_w0.iter().map(|w| rot(*w)));
    cands.extend((0..720).map(|i| {
        let a = i as f64 * std::f64::consts::PI / 720.0;
        Vec2::new(a.cos(), a.sin())
    }));
    for v0 in cands {
        if !v0.iter().all(|x| x.is_finite()) || v0.norm() == 0.0 {
            continue;
        }
        let v0 = v0.normalize();
        if let Some(sign) = verify_monotone(class, xi, extra, &v0) {
            return Ok(BarrierCertificate {
                kind: CertificateKind::MonotoneCoordinate,
                direction: sign,
                level: 0.0,
                params: CertificateParams { v0: Some(arr(&v0)), ..params },
                class,
            });
        }
    }
    Err(CertificateError::NoCertificate)
}
