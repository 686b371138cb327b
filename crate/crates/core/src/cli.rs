//! The `radial-control` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cost::RadialCost;
use crate::error::Error;
use crate::hjb::{self, HjbStatus};
use crate::montecarlo::{compare_policies, estimate_cost};
use crate::origin::classify_origin;
use crate::sim::{simulate_path, ControlPolicy, SimConfig};
use crate::switching::{build_schedule, SwitchingSchedule};
use crate::value::build_value;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SPEC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "radial-control", version, about = "Radially symmetric control of unit-variance martingales in a ball")]
pub struct Cli {
    /// Log level for diagnostics on stderr (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the switching schedule and write the value table.
    Solve {
        #[arg(long)]
        cost: PathBuf,
        /// Number of table rows.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Use a previously written schedule instead of recomputing it.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Print the origin classification.
    Classify {
        #[arg(long)]
        cost: PathBuf,
    },
    /// Simulate one path.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Index of the path within the seed's stream family.
        #[arg(long, default_value_t = 0)]
        path_index: u64,
        /// Write `t, Z, regime` samples here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write planar positions `t, x1, x2` here (d = 2 only).
        #[arg(long)]
        positions: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the expected cost of one policy.
    Estimate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
    },
    /// Rank the standard policies against the analytic value.
    Compare {
        #[arg(long)]
        cost: PathBuf,
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Radial patch radius for policies undefined at the origin.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Finite-difference check of the HJB equation.
    CheckHjb {
        #[arg(long)]
        cost: PathBuf,
        /// Write the residuals here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative tolerance, scaled by the largest |f| on the grid.
        #[arg(long, default_value_t = hjb::DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub cost: PathBuf,
    /// optimal, radial, tangential or lambda=<v>.
    #[arg(long, default_value = "optimal")]
    pub policy: String,
    #[arg(long)]
    pub x0: f64,
    /// Radial patch radius around the origin.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failed command together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_spec_error() => EXIT_SPEC,
            Error::InvalidConfig(_) | Error::OutOfDomain { .. } | Error::PolicyUndefinedAtOrigin => {
                EXIT_USAGE
            }
            _ => EXIT_FAIL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult = std::result::Result<u8, Failure>;

fn load_cost(path: &PathBuf) -> std::result::Result<RadialCost, Failure> {
    RadialCost::load(path).map_err(|e| Failure {
        code: EXIT_SPEC,
        message: format!("{}: {e}", path.display()),
    })
}

fn check_x0(cost: &RadialCost, x0: f64) -> std::result::Result<(), Failure> {
    if (0.0..cost.radius()).contains(&x0) {
        Ok(())
    } else {
        Err(Failure::usage(format!("--x0 must lie in [0, {}), got {x0}", cost.radius())))
    }
}

fn check_dt(dt: f64) -> std::result::Result<(), Failure> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--dt must be positive, got {dt}")))
    }
}

fn check_paths(paths: usize) -> std::result::Result<(), Failure> {
    if paths >= 1 {
        Ok(())
    } else {
        Err(Failure::usage("--paths must be at least 1"))
    }
}

fn create(path: &PathBuf) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_FAIL,
        message: format!("{}: {e}", path.display()),
    })
}

fn print_json<T: Serialize>(value: &T) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn build_policy(cost: &RadialCost, run: &RunArgs) -> std::result::Result<ControlPolicy, Failure> {
    let policy = ControlPolicy::parse(&run.policy, cost)?;
    let policy = match run.delta {
        Some(d) => policy.with_origin_delta(d),
        None => policy,
    };
    policy.validate(cost)?;
    Ok(policy)
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    policy: &'a str,
    mean: f64,
    se: f64,
    n: usize,
    capped_fraction: f64,
}

fn solve(cost: PathBuf, grid: usize, out: PathBuf, schedule: Option<PathBuf>) -> CliResult {
    let cost = load_cost(&cost)?;
    if grid == 0 {
        return Err(Failure::usage("--grid must be at least 1"));
    }
    let schedule = match schedule {
        Some(p) => SwitchingSchedule::load(&p, cost.radius()).map_err(|e| Failure {
            code: EXIT_SPEC,
            message: format!("{}: {e}", p.display()),
        })?,
        None => build_schedule(&cost)?,
    };
    let value = build_value(&cost, &schedule)?;
    println!("{}", schedule.to_json()?);
    value.write_table(grid, create(&out)?)?;
    Ok(EXIT_OK)
}

fn simulate(
    run: RunArgs,
    path_index: u64,
    trace: Option<PathBuf>,
    positions: Option<PathBuf>,
) -> CliResult {
    let cost = load_cost(&run.cost)?;
    check_x0(&cost, run.x0)?;
    check_dt(run.dt)?;
    if positions.is_some() && cost.dimension() != 2 {
        return Err(Failure::usage("--positions needs a two-dimensional cost"));
    }
    let policy = build_policy(&cost, &run)?;
    let cfg = SimConfig {
        dt: run.dt,
        seed: run.seed,
        n_paths: 1,
        trace: trace.is_some(),
        positions: positions.is_some(),
        ..SimConfig::default()
    };
    let result = simulate_path(&cost, &policy, run.x0, &cfg, path_index)?;
    if let (Some(path), Some(points)) = (&trace, &result.trace) {
        let mut w = csv::Writer::from_writer(create(path)?);
        for p in points {
            w.serialize(p).map_err(Error::from)?;
        }
        w.flush()?;
    }
    if let (Some(path), Some(points)) = (&positions, &result.positions) {
        let mut w = csv::Writer::from_writer(create(path)?);
        for p in points {
            w.serialize(p).map_err(Error::from)?;
        }
        w.flush()?;
    }
    #[derive(Serialize)]
    struct Summary {
        policy: String,
        exit_time: f64,
        accumulated_cost: f64,
        hit_cap: bool,
    }
    print_json(&Summary {
        policy: policy.name(),
        exit_time: result.exit_time,
        accumulated_cost: result.accumulated_cost,
        hit_cap: result.hit_cap,
    })?;
    Ok(EXIT_OK)
}

fn estimate(run: RunArgs, paths: usize) -> CliResult {
    let cost = load_cost(&run.cost)?;
    check_x0(&cost, run.x0)?;
    check_dt(run.dt)?;
    check_paths(paths)?;
    let policy = build_policy(&cost, &run)?;
    let cfg = SimConfig {
        dt: run.dt,
        seed: run.seed,
        n_paths: paths,
        ..SimConfig::default()
    };
    let est = estimate_cost(&cost, &policy, run.x0, &cfg)?;
    print_json(&EstimateOutput {
        policy: &policy.name(),
        mean: est.mean,
        se: est.std_error,
        n: est.n_paths,
        capped_fraction: est.capped_fraction,
    })?;
    Ok(EXIT_OK)
}

fn compare(cost: PathBuf, x0: f64, paths: usize, dt: f64, seed: u64, delta: f64) -> CliResult {
    let cost = load_cost(&cost)?;
    check_x0(&cost, x0)?;
    check_dt(dt)?;
    check_paths(paths)?;
    let value = crate::value::solve(&cost)?;
    let cfg = SimConfig {
        dt,
        seed,
        n_paths: paths,
        ..SimConfig::default()
    };
    let table = compare_policies(&cost, &value, x0, &cfg, delta)?;
    print_json(&table)?;
    let pass = table.value.is_none() || (table.value_is_lower_bound && table.optimal_matches_value);
    if !pass {
        eprintln!("analytic value is not consistent with the estimates");
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn check_hjb(cost: PathBuf, out: Option<PathBuf>, tol: f64) -> CliResult {
    let cost = load_cost(&cost)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::usage(format!("--tol must be positive, got {tol}")));
    }
    let value = crate::value::solve(&cost)?;
    let mut exclude = value.schedule().values();
    exclude.extend(cost.kinks());
    let report = hjb::verify_fn(|r| value.eval(r), &cost, &exclude, tol)?;
    if let Some(path) = out {
        report.write_csv(create(&path)?)?;
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match report.status {
        HjbStatus::Skip => writeln!(w, "SKIP cost is discontinuous")?,
        status => {
            writeln!(
                w,
                "{} max_violation={:.3e} tol={:.3e}",
                status.as_str(),
                report.max_violation,
                report.tol
            )?;
            if status == HjbStatus::Fail {
                for p in &report.worst {
                    writeln!(
                        w,
                        "  r={:.6} res_radial={:.3e} res_tangential={:.3e}",
                        p.r, p.res_radial, p.res_tangential
                    )?;
                }
            }
        }
    }
    Ok(if report.status == HjbStatus::Fail {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

/// Run a parsed command and return its exit code.
pub fn execute(cli: Cli) -> std::result::Result<u8, Failure> {
    match cli.command {
        Command::Solve {
            cost,
            grid,
            out,
            schedule,
        } => solve(cost, grid, out, schedule),
        Command::Classify { cost } => {
            let cost = load_cost(&cost)?;
            print_json(&classify_origin(&cost)?)?;
            Ok(EXIT_OK)
        }
        Command::Simulate {
            run,
            path_index,
            trace,
            positions,
        } => simulate(run, path_index, trace, positions),
        Command::Estimate { run, paths } => estimate(run, paths),
        Command::Compare {
            cost,
            x0,
            paths,
            dt,
            seed,
            delta,
        } => compare(cost, x0, paths, dt, seed, delta),
        Command::CheckHjb { cost, out, tol } => check_hjb(cost, out, tol),
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
