use super::{BarrierMonitor, Stepper};
use crate::algebra::GroupElement;
use crate::controllability::BarrierCertificate;
use crate::system::LinearSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Box over (t, v1, v2) split into res[i] cells per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub res: [usize; 3],
}

impl Grid {
    pub fn cube(lo: f64, hi: f64, res: usize) -> Self {
        Grid { lo: [lo; 3], hi: [hi; 3], res: [res; 3] }
    }

    pub fn cells(&self) -> usize {
        self.res.iter().product()
    }

    pub fn cell(&self, x: [f64; 3]) -> Option<usize> {
        let mut idx = 0;
        for i in 0..3 {
            if !(x[i] >= self.lo[i] && x[i] <= self.hi[i]) {
                return None;
            }
            let f = (x[i] - self.lo[i]) / (self.hi[i] - self.lo[i]);
            let k = ((f * self.res[i] as f64) as usize).min(self.res[i] - 1);
            idx = idx * self.res[i] + k;
        }
        Some(idx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachParams {
    pub n: usize,
    pub horizon: f64,
    pub u_bound: f64,
    pub seed: u64,
    pub grid: Grid,
    pub direction: Direction,
    pub dt: f64,
    pub keep_points: bool,
}

impl ReachParams {
    pub fn new(n: usize, horizon: f64, seed: u64, grid: Grid) -> Self {
        ReachParams { n, horizon, u_bound: 1.0, seed, grid, direction: Direction::Forward, dt: 1e-2, keep_points: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachSample {
    pub seed: u64,
    pub horizon: f64,
    pub n: usize,
    pub grid: Grid,
    pub visited: usize,
    pub occupancy: f64,
    /// Endpoints ordered by trajectory index.
    pub points: Option<Vec<GroupElement>>,
    /// Trajectories cut short by the blow-up guard.
    pub blowups: usize,
    pub max_violation: Option<f64>,
}

/// Per-worker accumulator; merging is order independent (OR and max).
struct Acc {
    bits: Vec<u64>,
    points: Vec<(usize, GroupElement)>,
    blowups: usize,
    violation: f64,
}

impl Acc {
    fn new(cells: usize) -> Self {
        Acc { bits: vec![0; cells.div_ceil(64)], points: Vec::new(), blowups: 0, violation: 0.0 }
    }

    fn mark(&mut self, c: usize) {
        self.bits[c / 64] |= 1 << (c % 64);
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.bits.iter_mut().zip(o.bits) {
            *a |= b;
        }
        self.points.extend(o.points);
        self.blowups += o.blowups;
        self.violation = self.violation.max(o.violation);
        self
    }
}

struct Job<'a> {
    system: &'a LinearSystem,
    horizon: f64,
    u_bound: f64,
    seed: u64,
    dt: f64,
    reverse: bool,
    start: GroupElement,
    grid: Option<&'a Grid>,
    cert: Option<&'a BarrierCertificate>,
    keep_points: bool,
}

/// Random bang-bang signal for trajectory `index`: its own ChaCha stream of the root seed.
fn run_one(job: &Job, index: usize, acc: &mut Acc) {
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    rng.set_stream(index as u64);
    let m = job.system.controls.len();
    let mut st = Stepper::new(job.system, job.reverse);
    let mut g = job.start;
    let mut monitor = job.cert.map(BarrierMonitor::new);
    if let Some(m) = monitor.as_mut() {
        m.observe(&g);
    }
    let mut s0 = 0.0;
    let mut u = vec![0.0; m];
    let grid = job.grid;
    while s0 < job.horizon {
        let d: f64 = Exp1.sample(&mut rng);
        let d = d.min(job.horizon - s0);
        for x in u.iter_mut() {
            *x = if rng.random_bool(0.5) { job.u_bound } else { -job.u_bound };
        }
        if d <= 0.0 {
            continue;
        }
        let mut visit = |_s: f64, g: &GroupElement| {
            if let Some(gr) = grid {
                if let Some(c) = gr.cell(g.coords()) {
                    acc.bits[c / 64] |= 1 << (c % 64);
                }
            }
            if let Some(m) = monitor.as_mut() {
                m.observe(g);
            }
        };
        match st.segment(&mut g, s0, &u, d, job.dt, &mut visit) {
            Ok(true) => {}
            _ => {
                acc.blowups += 1;
                break;
            }
        }
        s0 += d;
    }
    if let Some(m) = monitor {
        acc.violation = acc.violation.max(m.violation());
    }
    if job.keep_points {
        acc.points.push((index, g));
    }
}

fn run_sequential(job: &Job, n: usize, cells: usize) -> Acc {
    let mut acc = Acc::new(cells);
    for i in 0..n {
        run_one(job, i, &mut acc);
    }
    acc
}

#[cfg(feature = "parallel")]
fn run_parallel(job: &Job, n: usize, cells: usize) -> Acc {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .fold(
            || Acc::new(cells),
            |mut acc, i| {
                run_one(job, i, &mut acc);
                acc
            },
        )
        .reduce(|| Acc::new(cells), Acc::merge)
}

fn finish(p: &ReachParams, mut acc: Acc, system: &LinearSystem) -> ReachSample {
    let start = GroupElement::identity(system.class);
    if let Some(c) = p.grid.cell(start.coords()) {
        acc.mark(c);
    }
    let visited: usize = acc.bits.iter().map(|b| b.count_ones() as usize).sum();
    let points = p.keep_points.then(|| {
        acc.points.sort_by_key(|x| x.0);
        acc.points.into_iter().map(|x| x.1).collect()
    });
    ReachSample {
        seed: p.seed,
        horizon: p.horizon,
        n: p.n,
        grid: p.grid.clone(),
        visited,
        occupancy: visited as f64 / p.grid.cells() as f64,
        points,
        blowups: acc.blowups,
        max_violation: None,
    }
}

fn job<'a>(system: &'a LinearSystem, p: &'a ReachParams, cert: Option<&'a BarrierCertificate>) -> Job<'a> {
    Job {
        system,
        horizon: p.horizon,
        u_bound: p.u_bound,
        seed: p.seed,
        dt: p.dt,
        reverse: p.direction == Direction::Backward,
        start: GroupElement::identity(system.class),
        grid: Some(&p.grid),
        cert,
        keep_points: p.keep_points,
    }
}

fn sample_with(
    system: &LinearSystem,
    p: &ReachParams,
    cert: Option<&BarrierCertificate>,
    runner: fn(&Job, usize, usize) -> Acc,
) -> ReachSample {
    let j = job(system, p, cert);
    let acc = runner(&j, p.n, p.grid.cells());
    let violation = cert.map(|_| acc.violation);
    let mut r = finish(p, acc, system);
    r.max_violation = violation;
    r
}

/// Occupancy of N random bang-bang trajectories from the identity.
/// Uses rayon when the `parallel` feature is on; results do not depend on it.
pub fn reachable_sample(system: &LinearSystem, p: &ReachParams, cert: Option<&BarrierCertificate>) -> ReachSample {
    #[cfg(feature = "parallel")]
    {
        sample_with(system, p, cert, run_parallel)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sample_with(system, p, cert, run_sequential)
    }
}

pub fn reachable_sample_sequential(system: &LinearSystem, p: &ReachParams, cert: Option<&BarrierCertificate>) -> ReachSample {
    sample_with(system, p, cert, run_sequential)
}

#[cfg(feature = "parallel")]
pub fn reachable_sample_parallel(system: &LinearSystem, p: &ReachParams, cert: Option<&BarrierCertificate>) -> ReachSample {
    sample_with(system, p, cert, run_parallel)
}

/// Max monitored violation over n forward trajectories started at `start`.
pub fn batch_violation(
    system: &LinearSystem,
    cert: &BarrierCertificate,
    start: GroupElement,
    n: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> f64 {
    let j = Job {
        system,
        horizon,
        u_bound: 1.0,
        seed,
        dt,
        reverse: false,
        start,
        grid: None,
        cert: Some(cert),
        keep_points: false,
    };
    #[cfg(feature = "parallel")]
    let acc = run_parallel(&j, n, 0);
    #[cfg(not(feature = "parallel"))]
    let acc = run_sequential(&j, n, 0);
    acc.violation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AlgebraElement, GroupClass, Mat2, Vec2};
    use crate::derivation::make_derivation;

    fn sys() -> LinearSystem {
        let c = GroupClass::r3_prime(1.0).unwrap();
        let d = make_derivation(c, Mat2::zeros(), Vec2::new(1.0, 0.0)).unwrap();
        LinearSystem::new(c, d, vec![AlgebraElement::new(1.0, 0.0, 0.0)]).unwrap()
    }

    #[test]
    fn no_trajectories_marks_identity_cell_only() {
        let p = ReachParams::new(0, 5.0, 42, Grid::cube(-2.0, 2.0, 10));
        let r = reachable_sample(&sys(), &p, None);
        assert_eq!(r.visited, 1);
        assert_eq!(r.occupancy, 1.0 / 1000.0);
    }

    #[test]
    fn deterministic_and_backend_independent() {
        let mut p = ReachParams::new(40, 3.0, 7, Grid::cube(-2.0, 2.0, 8));
        p.keep_points = true;
        let a = reachable_sample_sequential(&sys(), &p, None);
        let b = reachable_sample(&sys(), &p, None);
        assert_eq!(a, b);
        assert!(a.visited > 1);
    }

    #[test]
    fn prefix_streams_are_stable() {
        let mut p = ReachParams::new(5, 2.0, 3, Grid::cube(-2.0, 2.0, 4));
        p.keep_points = true;
        let a = reachable_sample_sequential(&sys(), &p, None);
        p.n = 9;
        let b = reachable_sample_sequential(&sys(), &p, None);
        assert_eq!(a.points.unwrap()[..], b.points.unwrap()[..5]);
    }

    #[test]
    fn grid_cell_bounds() {
        let g = Grid::cube(-1.0, 1.0, 2);
        assert_eq!(g.cell([1.0, 1.0, 1.0]), Some(7));
        assert_eq!(g.cell([-1.0, -1.0, -1.0]), Some(0));
        assert_eq!(g.cell([1.5, 0.0, 0.0]), None);
    }
}
