//! `cir` command-line front end.
//!
//! Exit codes: 0 success, 1 domain or I/O error, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::Error;
use crate::estimators::{alt_estimate, mle_estimate, to_alpha_mu, DriftEstimate, EstimatorKind};
use crate::model::{stationary_density, ModelParams};
use crate::montecarlo::{run_experiment, run_experiment_with_workers};
use crate::simulate::{simulate_path, Path, Scheme, SimConfig};
use crate::statistics::{path_statistics, DEFAULT_INV_FLOOR};

#[derive(Debug, Parser)]
#[command(name = "cir", version, about = "Cox-Ingersoll-Ross simulation and drift estimation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write it as CSV
    Simulate(SimulateArgs),
    /// Estimate (a, b) from a path CSV
    Estimate(EstimateArgs),
    /// Run a replicated experiment described by a config file
    Montecarlo(MonteCarloArgs),
    /// Tabulate the stationary gamma density
    Density(DensityArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    Implicit,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::EulerFullTruncation,
            SchemeArg::Implicit => Scheme::DriftImplicitSqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Mle,
    Alt,
    Both,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    r0: f64,
    #[arg(long = "T", allow_negative_numbers = true)]
    horizon: f64,
    #[arg(long, allow_negative_numbers = true)]
    dt: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "euler")]
    scheme: SchemeArg,
    #[arg(long)]
    store_noise: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_INV_FLOOR, allow_negative_numbers = true)]
    inv_floor: f64,
    #[arg(long, value_enum, default_value = "both")]
    estimator: EstimatorArg,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    /// Experiment config (`key = value` lines)
    config: PathBuf,
    /// Worker threads; defaults to the number of cores
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, allow_negative_numbers = true)]
    sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    xmax: f64,
    #[arg(long)]
    points: usize,
}

#[derive(Debug)]
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Estimate(args) => cmd_estimate(&args, &mut out),
        Command::Montecarlo(args) => cmd_montecarlo(&args, &mut out),
        Command::Density(args) => cmd_density(&args, &mut out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let params = ModelParams::new(args.a, args.b, args.sigma, args.r0)?;
    let cfg = SimConfig::new(args.horizon, args.dt, args.scheme.into(), args.store_noise)?;
    let path = simulate_path(&params, &cfg, args.seed)?;
    let file = File::create(&args.out).map_err(|e| Failure(format!("{}: {e}", args.out.display())))?;
    let mut w = BufWriter::new(file);
    path.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn estimate_row(kind: EstimatorKind, est: Result<DriftEstimate, Error>, sigma: f64) -> String {
    match est {
        Ok(e) => {
            let mut warnings = Vec::new();
            let (alpha, mu) = match to_alpha_mu(&e) {
                Ok(am) => (format!("{:?}", am.alpha_est), format!("{:?}", am.mu_est)),
                Err(_) => {
                    warnings.push("zero mean-reversion estimate".to_string());
                    (String::new(), String::new())
                }
            };
            if kind == EstimatorKind::Mle && 2.0 * e.a_est <= sigma * sigma {
                warnings.push("feller condition fails for the estimate (2*a_est <= sigma^2); mle not well-defined".into());
            }
            format!(
                "{kind},{:?},{:?},{alpha},{mu},{:?},{}",
                e.a_est,
                e.b_est,
                e.denominator,
                warnings.join("; ")
            )
        }
        Err(err) => {
            let msg = match err {
                Error::DegenerateDenominator(_) => "degenerate denominator".to_string(),
                Error::UnreliableInverse => "unreliable inverse statistics (path reaches inv_floor)".to_string(),
                other => other.to_string().replace(',', ";"),
            };
            format!("{kind},,,,,,{msg}")
        }
    }
}

fn cmd_estimate<W: Write>(args: &EstimateArgs, out: &mut W) -> Result<(), Failure> {
    if !(args.sigma > 0.0) {
        return Err(Error::NonPositiveParameter("sigma").into());
    }
    let file = File::open(&args.input).map_err(|e| Failure(format!("{}: {e}", args.input.display())))?;
    let path = Path::read_csv(BufReader::new(file))?;
    let stats = path_statistics(&path, args.inv_floor)?;
    writeln!(out, "estimator,a_est,b_est,alpha_est,mu_est,denominator,warnings")?;
    if matches!(args.estimator, EstimatorArg::Mle | EstimatorArg::Both) {
        writeln!(out, "{}", estimate_row(EstimatorKind::Mle, mle_estimate(&stats), args.sigma))?;
    }
    if matches!(args.estimator, EstimatorArg::Alt | EstimatorArg::Both) {
        let row = estimate_row(EstimatorKind::Alternative, alt_estimate(&stats, args.sigma), args.sigma);
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn cmd_montecarlo<W: Write>(args: &MonteCarloArgs, out: &mut W) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure(format!("{}: {e}", args.config.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| Failure(format!("{}: {e}", args.config.display())))?;
    if cfg.experiment.mle_warning() {
        eprintln!("warning: 2a <= sigma^2; maximum likelihood cells are not well-defined and are flagged");
    }
    let report = match args.workers {
        Some(w) => run_experiment_with_workers(&cfg.experiment, w)?,
        None => run_experiment(&cfg.experiment)?,
    };
    let file = File::create(&cfg.out).map_err(|e| Failure(format!("{}: {e}", cfg.out.display())))?;
    let mut w = BufWriter::new(file);
    report.write_csv(&mut w)?;
    w.flush()?;
    write!(out, "{}", report.format_table())?;
    Ok(())
}

fn cmd_density<W: Write>(args: &DensityArgs, out: &mut W) -> Result<(), Failure> {
    // r0 plays no role in the stationary law
    let law = ModelParams::new(args.a, args.b, args.sigma, 1.0)?.stationary_law();
    if !(args.xmax.is_finite() && args.xmax > 0.0) {
        return Err(Failure(format!("xmax must be positive, got {}", args.xmax)));
    }
    if args.points == 0 {
        return Err(Failure("points must be at least 1".into()));
    }
    writeln!(out, "x,p_inf")?;
    for k in 1..=args.points {
        let x = args.xmax * k as f64 / args.points as f64;
        writeln!(out, "{x:?},{:?}", stationary_density(x, &law))?;
    }
    Ok(())
}
