use crate::algebra::{kernels, wrap, AlgebraElement, GroupClass, GroupElement, GroupKind, Mat2, Vec2};
use crate::system::LinearSystem;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("wrong regime: {0}")]
    WrongRegime(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    PlaneF,
    PlaneH,
    CylinderH,
}

/// π(t, v) = ρ_{−t} D* v − Λ_{−t} ξ.
pub fn plane_f(class: GroupClass, dstar: &Mat2, xi: &Vec2, t: f64, v: &Vec2) -> Vec2 {
    let k = kernels(class, -t);
    k.rho * (dstar * v) - k.lam * xi
}

/// A linear system pushed down to a two-dimensional chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedSystem {
    pub space: Space,
    pub class: GroupClass,
    pub dstar: Mat2,
    pub xi: Vec2,
    pub controls: Vec<AlgebraElement>,
    /// Normal direction for the H charts.
    pub v0: Vec2,
    /// Angular scale for the cylinder chart.
    pub beta: f64,
    pub chart_note: String,
}

pub fn projected_system(system: &LinearSystem, w0: Option<Vec2>) -> Result<ProjectedSystem, ProjectionError> {
    let d = &system.deriv;
    let class = system.class;
    let mk = |space, v0, beta, note: String| ProjectedSystem {
        space,
        class,
        dstar: d.dstar,
        xi: d.xi,
        controls: system.controls.clone(),
        v0,
        beta,
        chart_note: note,
    };
    if d.dstar_zero() {
        let w0 = w0.unwrap_or(d.xi);
        if w0.norm() == 0.0 {
            return Err(ProjectionError::WrongRegime("w0 must be nonzero".into()));
        }
        if class.kind() == GroupKind::R2 && w0.y != 0.0 {
            let v0 = Vec2::new(w0.y, -w0.x);
            return Ok(mk(
                Space::CylinderH,
                v0,
                w0.y,
                format!("(t, angle) with angle = <v, v0>/{} mod 2pi, v0 = ({}, {})", w0.y, v0.x, v0.y),
            ));
        }
        let v0 = Vec2::new(-w0.y, w0.x);
        if class.kind() == GroupKind::R2 && v0.x != 0.0 {
            return Err(ProjectionError::WrongRegime("z = <v, v0> is not defined on R2".into()));
        }
        return Ok(mk(Space::PlaneH, v0, 1.0, format!("(t, z) with z = <v, v0>, v0 = ({}, {})", v0.x, v0.y)));
    }
    match w0 {
        Some(_) => Err(ProjectionError::WrongRegime("w0 only applies when D* = 0".into())),
        None if d.dstar.determinant().abs() > 1e-12 * d.dstar.norm_squared() => Ok(mk(
            Space::PlaneF,
            Vec2::zeros(),
            1.0,
            "p = rho_{-t} D* v - Lambda_{-t} xi".into(),
        )),
        None => Err(ProjectionError::WrongRegime("PlaneF needs invertible D*".into())),
    }
}

impl ProjectedSystem {
    pub fn project(&self, g: &GroupElement) -> Vec2 {
        match self.space {
            Space::PlaneF => plane_f(self.class, &self.dstar, &self.xi, g.t, &g.v),
            Space::PlaneH => Vec2::new(g.t, g.v.dot(&self.v0)),
            Space::CylinderH => Vec2::new(g.t, wrap(g.v.dot(&self.v0) / self.beta, PI)),
        }
    }

    pub fn drift(&self, p: &Vec2) -> Vec2 {
        match self.space {
            Space::PlaneF => self.dstar * p,
            _ => {
                let k = kernels(self.class, p.x);
                Vec2::new(0.0, (k.lam * self.xi).dot(&self.v0) / self.beta)
            }
        }
    }

    pub fn control_map(&self, i: usize, p: &Vec2) -> Vec2 {
        let y = &self.controls[i];
        match self.space {
            Space::PlaneF => -(self.class.theta() * p - self.xi) * y.a + self.dstar * y.w,
            _ => {
                let k = kernels(self.class, p.x);
                Vec2::new(y.a, (k.rho * y.w).dot(&self.v0) / self.beta)
            }
        }
    }

    pub fn field(&self, p: &Vec2, u: &[f64]) -> Vec2 {
        let mut f = self.drift(p);
        for (i, ui) in u.iter().enumerate() {
            f += self.control_map(i, p) * *ui;
        }
        f
    }

    /// Reduce a chart point to its canonical form (angles for the cylinder).
    pub fn canonical(&self, p: Vec2) -> Vec2 {
        match self.space {
            Space::CylinderH => Vec2::new(p.x, wrap(p.y, PI)),
            _ => p,
        }
    }
}
