use clap::{Parser, Subcommand, ValueEnum};
use lincontrol::algebra::kernels;
use lincontrol::cli::{self, CliError};
use lincontrol::selftest;
use lincontrol::simulator::{Direction, ReachParams};
use std::path::PathBuf;
use std::process::ExitCode;

/// Decide controllability of linear systems on solvable 3D Lie groups.
///
/// Exit codes: 0 ok, 1 selftest failure, 2 parse error, 3 semantic error, 4 numeric failure.
#[derive(Parser)]
#[command(name = "lincontrol", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Forward,
    Backward,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the verdict record for a system config
    Decide { config: PathBuf },
    /// Integrate a piecewise-constant control signal and write the trajectory CSV
    Simulate {
        config: PathBuf,
        controls: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Horizon; the signal is cut or padded with zero control
        #[arg(short = 'T')]
        horizon: Option<f64>,
        #[arg(short = 'o')]
        out: PathBuf,
        /// Start point t,v1,v2 (default: identity)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
    },
    /// Sample random bang-bang trajectories and report grid occupancy
    Reachable {
        config: PathBuf,
        #[arg(short = 'n', default_value_t = 20000)]
        n: usize,
        #[arg(short = 'T', default_value_t = 15.0)]
        horizon: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// lo:hi:res for a cube, or three comma-separated lo:hi:res axes
        #[arg(long, default_value = "-2:2:20", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Dir::Forward)]
        direction: Dir,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        u_bound: f64,
        /// Write trajectory endpoints to this CSV
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Run the built-in invariant suites
    Selftest {
        /// Perturb Lambda by 1e-6 s theta; the kernel suite must then fail
        #[arg(long)]
        mutate_lambda: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Decide { config } => {
            let rec = cli::cmd_decide(&config)?;
            println!("{}", serde_json::to_string_pretty(&rec).expect("record serializes"));
        }
        Cmd::Simulate { config, controls, dt, horizon, out, start } => {
            let start = match start.as_deref() {
                None => None,
                Some(&[t, v1, v2]) => Some([t, v1, v2]),
                Some(_) => return Err(CliError::Parse("--start expects t,v1,v2".into())),
            };
            let s = cli::cmd_simulate(&config, &controls, dt, horizon, &out, start)?;
            println!(
                "final: s={:.16e} tau={:.16e} v1={:.16e} v2={:.16e} steps={}",
                s.s, s.tau, s.v1, s.v2, s.steps
            );
        }
        Cmd::Reachable { config, n, horizon, seed, grid, direction, dt, u_bound, points } => {
            let grid = cli::parse_grid(&grid)?;
            let mut p = ReachParams::new(n, horizon, seed, grid);
            p.dt = dt;
            p.u_bound = u_bound;
            p.direction = match direction {
                Dir::Forward => Direction::Forward,
                Dir::Backward => Direction::Backward,
            };
            let rep = cli::cmd_reachable(&config, &p, points.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
        }
        Cmd::Selftest { mutate_lambda } => {
            let k = if mutate_lambda { selftest::mutated_kernels } else { kernels };
            let results = selftest::run_selftest(k);
            let mut failed = Vec::new();
            for r in &results {
                println!("{}: {}/{} {}", r.name, r.passed, r.total, if r.ok() { "ok" } else { "FAIL" });
                for f in &r.failures {
                    println!("  {}", f);
                }
                if !r.ok() {
                    failed.push(r.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::SelftestFailed(format!("failed suites: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
