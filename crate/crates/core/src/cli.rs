//! Config schema and the command implementations behind the binary.

use crate::algebra::{AlgebraElement, GroupClass, GroupElement, GroupKind, Mat2, Vec2};
use crate::controllability::{decide, CertificateKind, CertificateParams, Clause};
use crate::derivation::make_derivation;
use crate::simulator::{self, ControlSignal, Direction, Grid, ReachParams, SimError};
use crate::system::LinearSystem;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Semantic(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    SelftestFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelftestFailed(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Semantic(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub class: GroupKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationConfig {
    pub dstar: [[f64; 2]; 2],
    pub xi: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub group: GroupConfig,
    pub derivation: DerivationConfig,
    pub controls: Vec<[f64; 3]>,
}

impl SystemConfig {
    pub fn from_system(s: &LinearSystem) -> Self {
        let d = &s.deriv;
        SystemConfig {
            group: GroupConfig { class: s.class.kind(), lambda: s.class.lambda(), n: s.class.n() },
            derivation: DerivationConfig {
                dstar: [[d.dstar[(0, 0)], d.dstar[(0, 1)]], [d.dstar[(1, 0)], d.dstar[(1, 1)]]],
                xi: [d.xi.x, d.xi.y],
            },
            controls: s.controls.iter().map(|c| [c.a, c.w.x, c.w.y]).collect(),
        }
    }

    /// Validate and build; errors name the offending key.
    pub fn build(&self) -> Result<LinearSystem, (&'static str, String)> {
        let g = &self.group;
        let class = GroupClass::new(g.class, g.lambda, g.n).map_err(|e| ("group", e.to_string()))?;
        let m = &self.derivation.dstar;
        let dstar = Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let xi = Vec2::new(self.derivation.xi[0], self.derivation.xi[1]);
        let d = make_derivation(class, dstar, xi).map_err(|e| ("dstar", e.to_string()))?;
        let controls = self.controls.iter().map(|c| AlgebraElement::new(c[0], c[1], c[2])).collect();
        LinearSystem::new(class, d, controls).map_err(|e| ("controls", e.to_string()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))
}

/// 1-based line of the first occurrence of "key" in the document, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let pat = format!("\"{}\"", key);
    text.lines().position(|l| l.contains(&pat)).map_or(1, |i| i + 1)
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{}:{}: parse error: {}", path.display(), e.line(), e)))
}

pub fn load_config(path: &Path) -> Result<(SystemConfig, LinearSystem), CliError> {
    let text = read(path)?;
    let cfg: SystemConfig = parse_json(path, &text)?;
    let sys = cfg
        .build()
        .map_err(|(key, msg)| CliError::Semantic(format!("{}:{}: invalid {}: {}", path.display(), line_of(&text, key), key, msg)))?;
    Ok((cfg, sys))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub kind: CertificateKind,
    pub direction: f64,
    pub level: f64,
    pub params: CertificateParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub config: SystemConfig,
    pub larc: bool,
    pub ad_rank: bool,
    pub delta_dim: usize,
    pub g0_dim: usize,
    pub spectrum: Vec<[f64; 2]>,
    pub controllable: bool,
    pub clause: Clause,
    pub explanation: String,
    pub certificate: Option<CertificateRecord>,
}

pub fn verdict_record(cfg: &SystemConfig, sys: &LinearSystem) -> VerdictRecord {
    let v = decide(sys);
    let mut spectrum: Vec<[f64; 2]> = v.analysis.decomposition.spectrum.iter().map(|z| [z.re, z.im]).collect();
    spectrum.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    VerdictRecord {
        config: cfg.clone(),
        larc: v.analysis.info.larc,
        ad_rank: v.analysis.info.ad_rank,
        delta_dim: v.analysis.info.delta_dim,
        g0_dim: v.analysis.decomposition.gzero_dim,
        spectrum,
        controllable: v.controllable,
        clause: v.clause,
        explanation: v.explanation,
        certificate: v.certificate.map(|c| CertificateRecord {
            kind: c.kind,
            direction: c.direction,
            level: c.level,
            params: c.params,
        }),
    }
}

pub fn cmd_decide(config_path: &Path) -> Result<VerdictRecord, CliError> {
    let (cfg, sys) = load_config(config_path)?;
    Ok(verdict_record(&cfg, &sys))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSummary {
    pub steps: usize,
    pub s: f64,
    pub tau: f64,
    pub v1: f64,
    pub v2: f64,
}

fn write_csv(traj: &simulator::Trajectory, out: &Path) -> Result<(), CliError> {
    let f = std::fs::File::create(out).map_err(|e| CliError::Parse(format!("{}: {}", out.display(), e)))?;
    traj.write_csv(std::io::BufWriter::new(f))
        .map_err(|e| CliError::Parse(format!("{}: {}", out.display(), e)))
}

pub fn cmd_simulate(
    config_path: &Path,
    controls_path: &Path,
    dt: f64,
    horizon: Option<f64>,
    out: &Path,
    start: Option<[f64; 3]>,
) -> Result<SimSummary, CliError> {
    let (_, sys) = load_config(config_path)?;
    let text = read(controls_path)?;
    let mut signal: ControlSignal = parse_json(controls_path, &text)?;
    let m = sys.controls.len();
    let bad = |msg: String| CliError::Semantic(format!("{}:{}: {}", controls_path.display(), line_of(&text, "segments"), msg));
    signal.validate().map_err(|e| bad(e.to_string()))?;
    if let Some(s) = signal.segments.iter().find(|s| s.u.len() != m) {
        return Err(bad(format!("segment has {} controls, system has {}", s.u.len(), m)));
    }
    if let Some(t) = horizon {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Semantic(format!("horizon must be positive, got {}", t)));
        }
        signal = signal.fit_to(t, m);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::Semantic(format!("dt must be positive, got {}", dt)));
    }
    let g0 = match start {
        Some([t, v1, v2]) => GroupElement::new(sys.class, t, Vec2::new(v1, v2)),
        None => GroupElement::identity(sys.class),
    };
    match simulator::integrate(&sys, &signal, &g0, dt) {
        Ok(traj) => {
            write_csv(&traj, out)?;
            let (s, g) = traj.samples.last().expect("nonempty");
            Ok(SimSummary { steps: traj.samples.len() - 1, s: *s, tau: g.t, v1: g.v.x, v2: g.v.y })
        }
        Err(SimError::NonFinite { at, partial }) => {
            write_csv(&partial, out)?;
            Err(CliError::Numeric(format!("trajectory blew up at s = {}; partial output in {}", at, out.display())))
        }
        Err(e) => Err(CliError::Semantic(e.to_string())),
    }
}

/// "lo:hi:res" for a cube, or three comma-separated "lo:hi:res" axes (t, v1, v2).
pub fn parse_grid(spec: &str) -> Result<Grid, CliError> {
    let err = || CliError::Parse(format!("bad grid spec '{}', expected lo:hi:res[,lo:hi:res,lo:hi:res]", spec));
    let axes: Vec<&str> = spec.split(',').collect();
    if axes.len() != 1 && axes.len() != 3 {
        return Err(err());
    }
    let mut parsed = Vec::new();
    for a in &axes {
        let p: Vec<&str> = a.split(':').collect();
        if p.len() != 3 {
            return Err(err());
        }
        let lo: f64 = p[0].trim().parse().map_err(|_| err())?;
        let hi: f64 = p[1].trim().parse().map_err(|_| err())?;
        let res: usize = p[2].trim().parse().map_err(|_| err())?;
        if !(lo < hi) || res == 0 {
            return Err(err());
        }
        parsed.push((lo, hi, res));
    }
    if parsed.len() == 1 {
        let (lo, hi, res) = parsed[0];
        return Ok(Grid::cube(lo, hi, res));
    }
    Ok(Grid {
        lo: [parsed[0].0, parsed[1].0, parsed[2].0],
        hi: [parsed[0].1, parsed[1].1, parsed[2].1],
        res: [parsed[0].2, parsed[1].2, parsed[2].2],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachReport {
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    pub direction: Direction,
    pub dt: f64,
    pub u_bound: f64,
    pub grid: Grid,
    pub visited_cells: usize,
    pub total_cells: usize,
    pub occupancy: f64,
    pub blowups: usize,
    pub controllable: bool,
    pub clause: Clause,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_barrier_violation: Option<f64>,
}

pub fn cmd_reachable(config_path: &Path, params: &ReachParams, points_out: Option<&Path>) -> Result<ReachReport, CliError> {
    let (_, sys) = load_config(config_path)?;
    if !(params.horizon.is_finite() && params.horizon >= 0.0) || !(params.dt > 0.0) || !(params.u_bound > 0.0) {
        return Err(CliError::Semantic("horizon, dt and u-bound must be positive".into()));
    }
    let v = decide(&sys);
    let mut p = params.clone();
    p.keep_points = points_out.is_some();
    let r = simulator::reachable_sample(&sys, &p, v.certificate.as_ref());
    if let (Some(out), Some(points)) = (points_out, &r.points) {
        let mut s = String::from("tau,v1,v2\n");
        for g in points {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", g.t, g.v.x, g.v.y));
        }
        std::fs::write(out, s).map_err(|e| CliError::Parse(format!("{}: {}", out.display(), e)))?;
    }
    Ok(ReachReport {
        n: r.n,
        horizon: r.horizon,
        seed: r.seed,
        direction: p.direction,
        dt: p.dt,
        u_bound: p.u_bound,
        total_cells: r.grid.cells(),
        grid: r.grid,
        visited_cells: r.visited,
        occupancy: r.occupancy,
        blowups: r.blowups,
        controllable: v.controllable,
        clause: v.clause,
        max_barrier_violation: r.max_violation,
    })
}
