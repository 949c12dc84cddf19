#![allow(dead_code)]

use lincontrol::algebra::{AlgebraElement, GroupClass, GroupKind, Mat2, Vec2};
use lincontrol::derivation::{make_derivation, DerivationError};
use lincontrol::system::LinearSystem;
use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

/// Expected outcome for a curated configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Expect {
    Verdict { controllable: bool, clause: &'static str },
    Rejected,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub class: GroupClass,
    pub dstar: Mat2,
    pub xi: Vec2,
    pub controls: Vec<[f64; 3]>,
    pub expect: Expect,
}

impl Entry {
    pub fn system(&self) -> Result<LinearSystem, DerivationError> {
        let d = make_derivation(self.class, self.dstar, self.xi)?;
        let c = self.controls.iter().map(|c| AlgebraElement::new(c[0], c[1], c[2])).collect();
        Ok(LinearSystem::new(self.class, d, c).expect("valid controls"))
    }
}

fn m(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

fn v(a: f64, b: f64) -> Vec2 {
    Vec2::new(a, b)
}

fn yes(clause: &'static str) -> Expect {
    Expect::Verdict { controllable: true, clause }
}

fn no(clause: &'static str) -> Expect {
    Expect::Verdict { controllable: false, clause }
}

const E0: [f64; 3] = [1.0, 0.0, 0.0];
const N1: [f64; 3] = [0.0, 1.0, 0.0];
const N2: [f64; 3] = [0.0, 0.0, 1.0];

/// Curated theorem-table matrix. Expected verdicts are worked out by hand from
/// the classification theorems (and the three R3_1 corrections).
pub fn matrix() -> Vec<Entry> {
    let r3l = |l| GroupClass::r3_lambda(l).unwrap();
    let r3p = |l| GroupClass::r3_prime(l).unwrap();
    let en = |n| GroupClass::e_n(n).unwrap();
    let e = |name, class, dstar, xi, controls: &[[f64; 3]], expect| Entry {
        name,
        class,
        dstar,
        xi,
        controls: controls.to_vec(),
        expect,
    };
    let r2t = GroupClass::R2TILDE;
    let r2 = GroupClass::R2;
    let r3 = GroupClass::R3;
    let et = GroupClass::ETILDE;
    vec![
        // dim Δ = 1
        e("r2t-aff", r2t, m(1.0, 0.0, 0.0, 0.0), v(1.0, 1.0), &[E0], yes("T1.R2Tilde")),
        e("r2t-abelian-g0", r2t, m(0.0, 0.0, 0.0, -1.0), v(1.0, 1.0), &[E0], no("T1.R2Tilde")),
        e("r2t-abelian-g0-pos", r2t, m(0.0, 0.0, 0.0, 1.0), v(1.0, 1.0), &[E0], no("T1.R2Tilde")),
        e("r2t-invertible", r2t, m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0], no("T1.R2Tilde")),
        e("r2t-zero", r2t, Mat2::zeros(), v(1.0, 1.0), &[E0], no("T1.R2Tilde")),
        e("r2-zero", r2, Mat2::zeros(), v(1.0, 1.0), &[E0], yes("T1.R2")),
        e("r2-singular", r2, m(0.0, 0.0, 0.0, -1.0), v(1.0, 1.0), &[E0], no("T1.R2")),
        e("r2-aff-rejected", r2, m(1.0, 0.0, 0.0, 0.0), v(1.0, 1.0), &[E0], Expect::Rejected),
        e("et-imaginary", et, m(0.0, -1.0, 1.0, 0.0), v(1.0, 0.0), &[E0], yes("T1.E")),
        e("e1-imaginary", en(1), m(0.0, -1.0, 1.0, 0.0), v(1.0, 0.0), &[E0], yes("T1.E")),
        e("e2-expanding", en(2), Mat2::identity(), v(1.0, 0.0), &[E0], no("T1.E")),
        e("et-contracting", et, m(-1.0, -2.0, 2.0, -1.0), v(1.0, 1.0), &[E0], no("T1.E")),
        e("et-zero", et, Mat2::zeros(), v(1.0, 0.5), &[E0], no("T1.E")),
        e("r3-nilpotent", r3, m(0.0, 1.0, 0.0, 0.0), v(0.0, 1.0), &[E0], yes("T1.R3")),
        e("r3-invertible", r3, m(-1.0, 1.0, 0.0, -1.0), v(1.0, 1.0), &[E0], no("T1.R3")),
        e("r3-zero", r3, Mat2::zeros(), v(1.0, 1.0), &[E0], no("T1.R3")),
        e("r3l-half-saddle", r3l(0.5), m(1.0, 0.0, 0.0, -1.0), v(1.0, 1.0), &[E0], no("T1.R3Lambda")),
        e("r3l-half-zero", r3l(0.5), Mat2::zeros(), v(1.0, 1.0), &[E0], no("T1.R3Lambda")),
        e("r3l-neg-singular", r3l(-0.5), m(0.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0], no("T1.R3Lambda")),
        e("r3l-half-scaled", r3l(0.5), m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0], no("T1.R3Lambda")),
        e("r31-rotation", r3l(1.0), m(0.0, -1.0, 1.0, 0.0), v(1.0, 0.0), &[E0], yes("T1.R3Lambda")),
        e("r31-spiral", r3l(1.0), m(1.0, -1.0, 1.0, 1.0), v(1.0, 0.0), &[E0], yes("T1.R3Lambda")),
        e("r31-real", r3l(1.0), m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0], no("T1.R3Lambda")),
        e("r31-nilpotent", r3l(1.0), m(0.0, 1.0, 0.0, 0.0), v(0.0, 1.0), &[E0], yes("T1.R3Lambda.NILPOTENT")),
        e("r3p-two", r3p(2.0), Mat2::identity(), v(1.0, 0.0), &[E0], yes("T1.R3Prime")),
        e("r3p-witness", r3p(1.0), Mat2::zeros(), v(1.0, 0.0), &[E0], yes("T1.R3Prime")),
        e("r3p-neg", r3p(-0.5), m(0.0, -1.0, 1.0, 0.0), v(0.0, 1.0), &[E0], yes("T1.R3Prime")),
        e("r3l-half-shifted", r3l(0.5), m(1.0, 0.0, 0.0, -1.0), v(1.0, 1.0), &[[2.0, 0.6, -0.4]], no("T1.R3Lambda")),
        // LARC failures
        e("larc-r2t", r2t, Mat2::zeros(), v(1.0, 0.0), &[E0, N1], no("LARC-FAIL")),
        e("larc-e-nil", et, m(1.0, -1.0, 1.0, 1.0), v(1.0, 0.0), &[N1, N2], no("LARC-FAIL")),
        e("larc-r31-scalar", r3l(1.0), m(2.0, 0.0, 0.0, 2.0), v(1.0, 0.0), &[E0], no("LARC-FAIL")),
        // dim Δ = 3
        e("dim3-e1", en(1), m(1.0, 0.0, 0.0, 1.0), v(1.0, 0.0), &[E0, N1], yes("DIM3-TRIVIAL")),
        e("dim3-r3", r3, m(-1.0, 1.0, 0.0, -1.0), v(1.0, 1.0), &[E0, N2], yes("DIM3-TRIVIAL")),
        // dim Δ = 2
        e("r2t-d2-aff", r2t, m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0, N2], yes("T2.R2Tilde")),
        e("r2t-d2-abelian", r2t, m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0, N1], no("T2.R2Tilde")),
        e("r2t-d2-big-g0", r2t, m(0.0, 0.0, 0.0, 1.0), v(1.0, 1.0), &[E0, N1], yes("T2.R2Tilde")),
        e("r2-d2", r2, m(0.0, 0.0, 0.0, -1.0), v(0.0, 1.0), &[E0, N1], yes("T2.R2")),
        e("r3-d2-nilpotent", r3, m(0.0, 1.0, 0.0, 0.0), v(0.0, 1.0), &[E0, N1], yes("T2.R3")),
        e("r3-d2-invertible", r3, m(-1.0, 1.0, 0.0, -1.0), v(1.0, 1.0), &[E0, N1], no("T2.R3")),
        e("r3l-d2-ker-out", r3l(0.5), m(0.0, 0.0, 0.0, 1.0), v(1.0, 1.0), &[E0, N2], yes("T2.R3Lambda")),
        e("r3l-d2-ker-in", r3l(0.5), m(0.0, 0.0, 0.0, 1.0), v(1.0, 1.0), &[E0, N1], no("T2.R3Lambda")),
        e("r3l-d2-invertible", r3l(0.5), m(1.0, 0.0, 0.0, -1.0), v(1.0, 1.0), &[E0, N2], no("T2.R3Lambda")),
        e("r31-d2-complex", r3l(1.0), m(0.0, -1.0, 1.0, 0.0), v(1.0, 0.0), &[E0, N1], yes("T2.R3Lambda")),
        e("r31-d2-nilpotent", r3l(1.0), m(0.0, 1.0, 0.0, 0.0), v(0.0, 1.0), &[E0, N1], yes("T2.R3Lambda.NILPOTENT")),
        e(
            "r31-d2-non-invariant",
            r3l(1.0),
            m(1.0, 0.0, 0.0, 2.0),
            v(1.0, 0.0),
            &[E0, [0.0, 1.0, 1.0]],
            yes("T2.R3Lambda.NON-INVARIANT"),
        ),
        e("r31-d2-invariant", r3l(1.0), m(1.0, 0.0, 0.0, 2.0), v(1.0, 1.0), &[E0, N1], no("T2.R3Lambda")),
    ]
}

/// exp(A) by a 30-term Taylor series after scaling A by 2^-k (‖A/2^k‖ ≤ 1/2), then squaring.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(k);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &b / j as f64;
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

pub fn dm2(m: &Mat2) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

/// (ρ_s, Λ_s) from the series oracle via exp([[sθ, sI], [0, 0]]).
pub fn kernel_oracle(theta: &Mat2, s: f64) -> (Mat2, Mat2) {
    let mut a = DMatrix::<f64>::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = s * theta[(i, j)];
        }
        a[(i, i + 2)] = s;
    }
    let e = expm_taylor(&a);
    (
        Mat2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]),
        Mat2::new(e[(0, 2)], e[(0, 3)], e[(1, 2)], e[(1, 3)]),
    )
}

/// Rank by Gaussian elimination with a randomly chosen pivot among acceptable rows.
pub fn random_pivot_rank(vectors: &[[f64; 3]], rng: &mut impl Rng) -> usize {
    let mut rows: Vec<[f64; 3]> = vectors
        .iter()
        .filter_map(|v| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
        })
        .collect();
    let mut rank = 0;
    let mut cols = vec![0usize, 1, 2];
    cols.shuffle(rng);
    for &c in &cols {
        let best = rows[rank..].iter().map(|r| r[c].abs()).fold(0.0, f64::max);
        if best <= 1e-9 {
            continue;
        }
        let ok: Vec<usize> = (rank..rows.len()).filter(|&i| rows[i][c].abs() >= 0.5 * best).collect();
        let p = ok[rng.random_range(0..ok.len())];
        rows.swap(rank, p);
        let piv = rows[rank];
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[c] / piv[c];
            for j in 0..3 {
                r[j] -= f * piv[j];
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn br(theta: &Mat2, x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
    let w = Vec2::new(x[1], x[2]);
    let v = Vec2::new(y[1], y[2]);
    let r = theta * v * x[0] - theta * w * y[0];
    [0.0, r.x, r.y]
}

/// Dimension of the smallest D-invariant subalgebra containing the generators,
/// grown one randomly ordered candidate at a time.
pub fn larc_oracle_dim(theta: &Mat2, dstar: &Mat2, xi: &Vec2, gens: &[[f64; 3]], rng: &mut impl Rng) -> usize {
    let apply = |x: &[f64; 3]| {
        let w = dstar * Vec2::new(x[1], x[2]) + xi * x[0];
        [0.0, w.x, w.y]
    };
    let mut set: Vec<[f64; 3]> = Vec::new();
    let mut pending: Vec<[f64; 3]> = gens.to_vec();
    loop {
        pending.shuffle(rng);
        let mut grew = false;
        for c in pending.drain(..) {
            let mut trial = set.clone();
            trial.push(c);
            if random_pivot_rank(&trial, rng) > random_pivot_rank(&set, rng) {
                set.push(c);
                grew = true;
            }
        }
        if !grew && !set.is_empty() {
            break;
        }
        for i in 0..set.len() {
            pending.push(apply(&set[i]));
            for j in 0..set.len() {
                if i != j {
                    pending.push(br(theta, &set[i], &set[j]));
                }
            }
        }
        if !grew {
            break;
        }
    }
    random_pivot_rank(&set, rng)
}

pub fn random_class(rng: &mut impl Rng) -> GroupClass {
    match rng.random_range(0..8) {
        0 => GroupClass::R2TILDE,
        1 => GroupClass::R2,
        2 => GroupClass::R3,
        3 => GroupClass::r3_lambda(*[0.5, -0.5, 1.0, -1.0, 0.25].choose(rng).unwrap()).unwrap(),
        4 => GroupClass::r3_lambda(1.0).unwrap(),
        5 => GroupClass::r3_prime(*[1.0, -2.0, 0.5].choose(rng).unwrap()).unwrap(),
        6 => GroupClass::ETILDE,
        _ => GroupClass::e_n(rng.random_range(1..4)).unwrap(),
    }
}

/// Small-integer D* commuting with θ, so that degenerate cases are frequent.
pub fn random_int_dstar(class: GroupClass, rng: &mut impl Rng) -> Mat2 {
    let mut r = || rng.random_range(-1i32..=1) as f64;
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

pub fn random_int_system(rng: &mut impl Rng) -> LinearSystem {
    loop {
        let class = random_class(rng);
        let dstar = random_int_dstar(class, rng);
        let xi = Vec2::new(rng.random_range(-1i32..=1) as f64, rng.random_range(-1i32..=1) as f64);
        let Ok(d) = make_derivation(class, dstar, xi) else { continue };
        let k = rng.random_range(1..=2);
        let controls: Vec<AlgebraElement> = (0..k)
            .map(|_| {
                AlgebraElement::new(
                    rng.random_range(-1i32..=1) as f64,
                    rng.random_range(-1i32..=1) as f64,
                    rng.random_range(-1i32..=1) as f64,
                )
            })
            .filter(|c| c.norm() > 0.0)
            .collect();
        if controls.is_empty() {
            continue;
        }
        return LinearSystem::new(class, d, controls).unwrap();
    }
}

/// Classical RK4 on a planar chart with piecewise-constant u, sampling every step.
pub fn rk4_plane(
    f: &dyn Fn(&Vec2, &[f64]) -> Vec2,
    p0: Vec2,
    segments: &[(f64, Vec<f64>)],
    dt: f64,
) -> Vec<(f64, Vec2)> {
    let mut out = vec![(0.0, p0)];
    let mut p = p0;
    let mut s0 = 0.0;
    for (d, u) in segments {
        let n = ((d / dt) - 1e-9).ceil().max(1.0) as usize;
        for i in 0..n {
            let h = if i + 1 == n { d - dt * (n - 1) as f64 } else { dt };
            let k1 = f(&p, u);
            let k2 = f(&(p + k1 * (h / 2.0)), u);
            let k3 = f(&(p + k2 * (h / 2.0)), u);
            let k4 = f(&(p + k3 * h), u);
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let s = if i + 1 == n { s0 + d } else { s0 + dt * (i + 1) as f64 };
            out.push((s, p));
        }
        s0 += d;
    }
    out
}
