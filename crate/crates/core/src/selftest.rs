//! Built-in invariant suites run by `selftest`.
//!
//! The kernel suites take the kernel implementation as a parameter so that a
//! deliberately perturbed Λ can be shown to fail them.

use crate::algebra::{
    bracket, exp_map, group_inv, group_mul, kernels, AlgebraElement, FlowKernel, GroupClass, GroupElement, GroupKind,
    Mat2, Vec2,
};
use crate::derivation::{apply_derivation, make_derivation, Derivation};
use crate::simulator::{integrate, linear_flow, ControlSignal};
use crate::system::LinearSystem;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type KernelFn = fn(GroupClass, f64) -> FlowKernel;

/// Λ_s perturbed by 1e-6·s·θ: the documented mutation for `selftest --mutate-lambda`.
pub fn mutated_kernels(class: GroupClass, s: f64) -> FlowKernel {
    let mut k = kernels(class, s);
    k.lam += class.theta() * (1e-6 * s);
    k
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, passed: 0, total: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < 5 {
            self.failures.push(what());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

pub fn random_class(rng: &mut impl Rng) -> GroupClass {
    match rng.random_range(0..7) {
        0 => GroupClass::R2TILDE,
        1 => GroupClass::R2,
        2 => GroupClass::R3,
        3 => {
            let l: f64 = if rng.random_bool(0.2) { 1.0 } else { rng.random_range(0.05..1.0) };
            GroupClass::r3_lambda(if rng.random_bool(0.5) { l } else { -l }).expect("valid lambda")
        }
        4 => {
            let l: f64 = rng.random_range(0.1..2.0);
            GroupClass::r3_prime(if rng.random_bool(0.5) { l } else { -l }).expect("valid lambda")
        }
        5 => GroupClass::ETILDE,
        _ => GroupClass::e_n(rng.random_range(1..4)).expect("valid n"),
    }
}

/// A random D* commuting with θ.
pub fn random_dstar(class: GroupClass, rng: &mut impl Rng) -> Mat2 {
    let mut r = || rng.random_range(-1.5..1.5);
    match class.kind() {
        GroupKind::R2Tilde => Mat2::new(r(), 0.0, 0.0, r()),
        GroupKind::R2 => Mat2::new(0.0, 0.0, 0.0, r()),
        GroupKind::R3 => {
            let (a, b) = (r(), r());
            Mat2::new(a, b, 0.0, a)
        }
        GroupKind::R3Lambda if class.is_r3_one() => Mat2::new(r(), r(), r(), r()),
        GroupKind::R3Lambda => Mat2::new(r(), 0.0, 0.0, r()),
        _ => {
            let (a, b) = (r(), r());
            Mat2::new(a, -b, b, a)
        }
    }
}

pub fn random_derivation(class: GroupClass, rng: &mut impl Rng) -> Derivation {
    let xi = Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
    make_derivation(class, random_dstar(class, rng), xi).expect("random derivation is valid")
}

fn rel(a: &Mat2, b: &Mat2, scale: f64) -> f64 {
    (a - b).norm() / scale.max(1.0)
}

pub fn kernel_suite(k: KernelFn, rng: &mut impl Rng, cases: usize) -> SuiteResult {
    let mut r = SuiteResult::new("kernel identities");
    let id = Mat2::identity();
    for _ in 0..cases {
        let c = random_class(rng);
        let th = c.theta();
        let s: f64 = rng.random_range(-5.0..5.0);
        let t: f64 = rng.random_range(-5.0..5.0);
        let (ks, kt, kst) = (k(c, s), k(c, t), k(c, s + t));
        r.check(k(c, 0.0).lam.norm() == 0.0, || format!("{}: Lambda_0 != 0", c));
        let e = rel(&(ks.rho - th * ks.lam), &id, ks.rho.norm());
        r.check(e <= 1e-10, || format!("{} s={}: rho - theta Lambda != I ({:e})", c, s, e));
        let e = rel(&(ks.rho * kt.lam), &(kt.lam * ks.rho), ks.rho.norm() * kt.lam.norm());
        r.check(e <= 1e-10, || format!("{}: rho_s Lambda_t != Lambda_t rho_s ({:e})", c, e));
        let sum = kt.lam + kt.rho * ks.lam;
        let scale = kst.lam.norm().max(kt.lam.norm()).max(kt.rho.norm() * ks.lam.norm());
        let e = rel(&sum, &kst.lam, scale);
        r.check(e <= 1e-10, || format!("{} s={} t={}: addition law ({:e})", c, s, t, e));
        let h = 1e-6;
        let fd = (k(c, s + h).lam - k(c, s - h).lam) / (2.0 * h);
        let e = rel(&fd, &ks.rho, ks.rho.norm());
        r.check(e <= 1e-6, || format!("{} s={}: dLambda/ds != rho ({:e})", c, s, e));
    }
    r
}

pub fn group_suite(rng: &mut impl Rng, cases: usize) -> SuiteResult {
    let mut r = SuiteResult::new("group and bracket laws");
    for _ in 0..cases {
        let c = random_class(rng);
        let mut el = || GroupElement::new(c, rng.random_range(-2.0..2.0), Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let (a, b, d) = (el(), el(), el());
        let l = group_mul(&group_mul(&a, &b).unwrap(), &d).unwrap();
        let rr = group_mul(&a, &group_mul(&b, &d).unwrap()).unwrap();
        r.check(close_elements(&l, &rr, 1e-12), || format!("{}: associativity", c));
        let e = group_mul(&a, &group_inv(&a)).unwrap();
        r.check(close_elements(&e, &GroupElement::identity(c), 1e-12), || format!("{}: inverse", c));
        let mut x = || AlgebraElement::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (x, y, z) = (x(), x(), x());
        let jac = bracket(c, &x, &bracket(c, &y, &z))
            .add(&bracket(c, &y, &bracket(c, &z, &x)))
            .add(&bracket(c, &z, &bracket(c, &x, &y)));
        r.check(jac.norm() <= 1e-12 * 64.0, || format!("{}: Jacobi {:e}", c, jac.norm()));
        let d = random_derivation(c, rng);
        let lhs = apply_derivation(&d, &bracket(c, &x, &y));
        let rhs = bracket(c, &apply_derivation(&d, &x), &y).add(&bracket(c, &x, &apply_derivation(&d, &y)));
        r.check(lhs.sub(&rhs).norm() <= 1e-10 * lhs.norm().max(1.0), || format!("{}: Leibniz", c));
    }
    r
}

/// Distance in coordinates, treating the quotient coordinate modulo its period.
pub fn close_elements(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
    let scale = 1.0 + a.v.norm().max(b.v.norm()) + a.t.abs().max(b.t.abs());
    let d = GroupElement::new(a.class, a.t - b.t, a.v - b.v);
    let dt = match a.class.kind() {
        GroupKind::En => d.t.abs(),
        _ => (a.t - b.t).abs(),
    };
    let dv = match a.class.kind() {
        GroupKind::R2 => Vec2::new(d.v.x, a.v.y - b.v.y).norm(),
        _ => (a.v - b.v).norm(),
    };
    dt.max(dv) <= tol * scale
}

pub fn flow_suite(rng: &mut impl Rng, cases: usize) -> SuiteResult {
    let mut r = SuiteResult::new("flow laws");
    for _ in 0..cases {
        let c = random_class(rng);
        let d = random_derivation(c, rng);
        let s: f64 = rng.random_range(-1.0..1.0);
        let y = AlgebraElement::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let esd = (d.matrix3() * s).exp();
        let lhs = linear_flow(&d, s, &exp_map(c, &y));
        let rhs = exp_map(c, &AlgebraElement::from_vec3(&(esd * y.to_vec3())));
        r.check(close_elements(&lhs, &rhs, 1e-9), || format!("{} s={}: flow of exp", c, s));
        let g = exp_map(c, &y);
        let h = GroupElement::new(c, rng.random_range(-2.0..2.0), Vec2::new(rng.random_range(-2.0..2.0), 0.5));
        let lhs = linear_flow(&d, s, &group_mul(&g, &h).unwrap());
        let rhs = group_mul(&linear_flow(&d, s, &g), &linear_flow(&d, s, &h)).unwrap();
        r.check(close_elements(&lhs, &rhs, 1e-9), || format!("{} s={}: automorphism", c, s));
    }
    let _: Matrix3<f64> = Matrix3::identity();
    r
}

pub fn rk4_suite(rng: &mut impl Rng, cases: usize) -> SuiteResult {
    let mut r = SuiteResult::new("rk4 vs closed-form flow");
    for _ in 0..cases {
        let c = random_class(rng);
        let d = random_derivation(c, rng);
        let sys = LinearSystem::new(c, d, vec![AlgebraElement::new(1.0, 0.0, 0.0)]).expect("valid system");
        let g0 = GroupElement::new(c, 1.0, Vec2::new(2.0, 3.0));
        let tr = integrate(&sys, &ControlSignal::constant(vec![0.0], 1.0), &g0, 1e-3).expect("finite");
        let exact = linear_flow(&d, 1.0, &g0);
        r.check(close_elements(tr.last(), &exact, 1e-8), || format!("{}: rk4 error above 1e-8", c));
    }
    r
}

pub fn run_selftest(k: KernelFn) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    vec![
        kernel_suite(k, &mut rng, 1000),
        group_suite(&mut rng, 500),
        flow_suite(&mut rng, 300),
        rk4_suite(&mut rng, 30),
    ]
}
