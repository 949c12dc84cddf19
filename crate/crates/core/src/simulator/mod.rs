//! Linear flows, controlled integration, reachable-set sampling and barrier monitoring.

mod reach;

pub use reach::{
    batch_violation, reachable_sample, reachable_sample_sequential, Direction, Grid, ReachParams, ReachSample,
};
#[cfg(feature = "parallel")]
pub use reach::reachable_sample_parallel;

use crate::algebra::{kernels, AlgebraElement, FlowKernel, GroupClass, GroupElement, Mat2, Vec2};
use crate::controllability::BarrierCertificate;
use crate::derivation::Derivation;
use crate::system::LinearSystem;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Coordinates beyond this abort the integration.
pub const BLOWUP: f64 = 1e12;
/// Slack before a trajectory counts as inside a certified region.
pub const ENTRY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("control vector has {got} entries, system has {expected} controls")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("segment durations must be positive and finite")]
    InvalidSignal,
    #[error("trajectory left the finite range at s = {at}")]
    NonFinite { at: f64, partial: Box<Trajectory> },
    #[error("certificate class {cert} does not match trajectory class {traj}")]
    RegimeMismatch { cert: GroupClass, traj: GroupClass },
}

/// e^{sD*} and F_s = ∫_0^s e^{rD*} dr.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowMap {
    pub exp_d: Mat2,
    pub f: Mat2,
}

pub fn flow_map(d: &Derivation, s: f64) -> FlowMap {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = s * d.dstar[(i, j)];
        }
        m[(i, i + 2)] = s;
    }
    let e = m.exp();
    FlowMap {
        exp_d: Mat2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]),
        f: Mat2::new(e[(0, 2)], e[(0, 3)], e[(1, 2)], e[(1, 3)]),
    }
}

/// φ_s(t, v) = (t, e^{sD*} v + F_s Λ_t ξ).
pub fn linear_flow(d: &Derivation, s: f64, g: &GroupElement) -> GroupElement {
    let fm = flow_map(d, s);
    let lam = kernels(g.class, g.t).lam;
    GroupElement::new(g.class, g.t, fm.exp_d * g.v + fm.f * (lam * d.xi))
}

/// X(g) + Σ u_i Y_i^L(g) in the (t, v) chart.
pub fn system_field(system: &LinearSystem, u: &[f64], g: &GroupElement) -> Result<AlgebraElement, SimError> {
    let (a, w) = combine(system, u)?;
    let k = kernels(system.class, g.t);
    Ok(AlgebraElement { a, w: eval(&system.deriv, &k, &g.v, &w) })
}

fn combine(system: &LinearSystem, u: &[f64]) -> Result<(f64, Vec2), SimError> {
    if u.len() != system.controls.len() {
        return Err(SimError::DimensionMismatch { expected: system.controls.len(), got: u.len() });
    }
    let mut a = 0.0;
    let mut w = Vec2::zeros();
    for (ui, y) in u.iter().zip(&system.controls) {
        a += ui * y.a;
        w += y.w * *ui;
    }
    Ok((a, w))
}

#[inline]
fn eval(d: &Derivation, k: &FlowKernel, v: &Vec2, w: &Vec2) -> Vec2 {
    d.dstar * v + k.lam * d.xi + k.rho * w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSignal {
    pub segments: Vec<Segment>,
}

impl ControlSignal {
    pub fn new(segments: Vec<Segment>) -> Result<Self, SimError> {
        let s = ControlSignal { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.segments.iter().any(|s| !(s.duration.is_finite() && s.duration > 0.0)) {
            return Err(SimError::InvalidSignal);
        }
        Ok(())
    }

    pub fn constant(u: Vec<f64>, duration: f64) -> Self {
        ControlSignal { segments: vec![Segment { duration, u }] }
    }

    pub fn horizon(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Cut at horizon T, padding with zero control when the signal is shorter.
    pub fn fit_to(&self, horizon: f64, m: usize) -> Self {
        let mut out = Vec::new();
        let mut acc = 0.0;
        for s in &self.segments {
            if acc >= horizon {
                break;
            }
            let d = s.duration.min(horizon - acc);
            out.push(Segment { duration: d, u: s.u.clone() });
            acc += d;
        }
        if horizon - acc > 1e-12 * horizon.max(1.0) {
            out.push(Segment { duration: horizon - acc, u: vec![0.0; m] });
        }
        ControlSignal { segments: out }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, GroupElement)>,
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GroupElement {
        &self.samples.last().expect("nonempty trajectory").1
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,tau,v1,v2")?;
        for (s, g) in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s, g.t, g.v.x, g.v.y)?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 driver; `sign = -1` integrates the time-reversed field.
pub(crate) struct Stepper<'a> {
    sys: &'a LinearSystem,
    sign: f64,
    pub steps: usize,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(sys: &'a LinearSystem, reverse: bool) -> Self {
        Stepper { sys, sign: if reverse { -1.0 } else { 1.0 }, steps: 0 }
    }

    #[inline]
    fn step(&self, t: &mut f64, v: &mut Vec2, a: f64, w: &Vec2, h: f64, k0: &FlowKernel) -> FlowKernel {
        let d = &self.sys.deriv;
        let c = self.sys.class;
        let sg = self.sign;
        let ta = sg * a;
        let km = if ta == 0.0 { *k0 } else { kernels(c, *t + 0.5 * h * ta) };
        let ke = if ta == 0.0 { *k0 } else { kernels(c, *t + h * ta) };
        let k1 = eval(d, k0, v, w) * sg;
        let k2 = eval(d, &km, &(*v + k1 * (0.5 * h)), w) * sg;
        let k3 = eval(d, &km, &(*v + k2 * (0.5 * h)), w) * sg;
        let k4 = eval(d, &ke, &(*v + k3 * h), w) * sg;
        *v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        *t += h * ta;
        ke
    }

    /// Integrate one constant-control segment, calling `visit(s, g)` after each step.
    /// Returns false if the state blew up.
    pub(crate) fn segment(
        &mut self,
        g: &mut GroupElement,
        s0: f64,
        u: &[f64],
        duration: f64,
        dt: f64,
        visit: &mut impl FnMut(f64, &GroupElement),
    ) -> Result<bool, SimError> {
        let (a, w) = combine(self.sys, u)?;
        let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let mut t = g.t;
        let mut v = g.v;
        let mut k = kernels(g.class, t);
        for i in 0..n {
            let h = if i + 1 == n { duration - dt * (n - 1) as f64 } else { dt };
            k = self.step(&mut t, &mut v, a, &w, h, &k);
            let (ct, cv) = g.class.canonicalize(t, v);
            if ct != t {
                k = kernels(g.class, ct);
            }
            t = ct;
            v = cv;
            self.steps += 1;
            *g = GroupElement { t, v, class: g.class };
            if !(t.abs() <= BLOWUP && v.x.abs() <= BLOWUP && v.y.abs() <= BLOWUP) {
                return Ok(false);
            }
            let s = if i + 1 == n { s0 + duration } else { s0 + dt * (i + 1) as f64 };
            visit(s, g);
        }
        Ok(true)
    }
}

pub fn integrate(system: &LinearSystem, signal: &ControlSignal, g0: &GroupElement, dt: f64) -> Result<Trajectory, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidStep(dt));
    }
    signal.validate()?;
    let mut samples = vec![(0.0, *g0)];
    let mut st = Stepper::new(system, false);
    let mut g = *g0;
    let mut s0 = 0.0;
    for seg in &signal.segments {
        let ok = st.segment(&mut g, s0, &seg.u, seg.duration, dt, &mut |s, g| samples.push((s, *g)))?;
        if !ok {
            let at = samples.last().map_or(s0, |x| x.0);
            return Err(SimError::NonFinite { at, partial: Box::new(Trajectory { samples, dt }) });
        }
        s0 += seg.duration;
    }
    Ok(Trajectory { samples, dt })
}

/// Streaming violation tracker for one trajectory.
#[derive(Clone, Debug)]
pub struct BarrierMonitor<'a> {
    cert: &'a BarrierCertificate,
    entered: bool,
    best: f64,
    violation: f64,
}

impl<'a> BarrierMonitor<'a> {
    pub fn new(cert: &'a BarrierCertificate) -> Self {
        BarrierMonitor { cert, entered: false, best: f64::NEG_INFINITY, violation: 0.0 }
    }

    #[inline]
    pub fn observe(&mut self, g: &GroupElement) {
        let f = self.cert.direction * self.cert.evaluate(g);
        if self.cert.is_region() {
            let h = f - self.cert.direction * self.cert.level;
            if !self.entered && h >= -ENTRY_TOL * self.cert.level.abs().max(1.0) {
                self.entered = true;
            }
            if self.entered {
                self.violation = self.violation.max(-h);
            }
        } else {
            self.best = self.best.max(f);
            self.violation = self.violation.max(self.best - f);
        }
    }

    pub fn violation(&self) -> f64 {
        self.violation
    }
}

/// Largest decrease of the certified functional along the trajectory.
pub fn monitor_barrier(trajectory: &Trajectory, cert: &BarrierCertificate) -> Result<f64, SimError> {
    let mut m = BarrierMonitor::new(cert);
    for (_, g) in &trajectory.samples {
        if g.class != cert.class {
            return Err(SimError::RegimeMismatch { cert: cert.class, traj: g.class });
        }
        m.observe(g);
    }
    Ok(m.violation())
}
