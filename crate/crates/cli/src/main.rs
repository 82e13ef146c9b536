//! `mellin-deconv`: multiplicative deconvolution density estimation from the
//! command line.
//!
//! Exit status: 0 success, 1 failed check, 2 bad input or configuration,
//! 3 error density whose Mellin transform vanishes on the frequency grid.

mod commands;
mod config;
mod error;
mod io;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    CalibrateConfig, CutoffChoice, EstimateConfig, EstimateMode, RatecheckConfig, RunConfig, SimulateConfig,
    SimulateMode,
};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "mellin-deconv",
    version,
    about = "Spectral cut-off density estimation under multiplicative noise"
)]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "MELLIN_DECONV_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the density of X from a file of observations Y = X·U.
    Estimate(EstimateArgs),
    /// Monte Carlo risk of the estimator on a known model.
    Simulate(SimulateArgs),
    /// Choose the penalty constant on random histogram densities.
    Calibrate(CalibrateArgs),
    /// Compare the empirical rate of convergence with the theoretical one.
    Ratecheck(RatecheckArgs),
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    x_points: Option<usize>,
    /// Largest frequency of the Mellin grid.
    #[arg(long)]
    t_max: Option<f64>,
    /// Spacing of the Mellin frequency grid; t_max must be a multiple.
    #[arg(long)]
    t_step: Option<f64>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// One positive observation per line, optional header.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// CSV with columns x,f_hat.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, short)]
    error: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<EstimateMode>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long, short)]
    k: Option<f64>,
    /// Report negative estimates as they are instead of clipping at zero.
    #[arg(long)]
    no_clip: bool,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, short)]
    target: Option<String>,
    #[arg(long, short)]
    error: Option<String>,
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long, short)]
    reps: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<SimulateMode>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long, short)]
    k: Option<f64>,
    #[arg(long, short)]
    seed: Option<u64>,
    /// Directory receiving risk.csv, curve.csv and report.json.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, short)]
    error: Option<String>,
    /// Candidate values, comma separated.
    #[arg(long, value_delimiter = ',')]
    chi_grid: Option<Vec<f64>>,
    #[arg(long)]
    histograms: Option<usize>,
    #[arg(long, short)]
    reps: Option<usize>,
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long)]
    span: Option<f64>,
    #[arg(long)]
    min_bins: Option<usize>,
    #[arg(long)]
    max_bins: Option<usize>,
    #[arg(long, short)]
    seed: Option<u64>,
    /// JSON file for the per-candidate risks.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct RatecheckArgs {
    #[arg(long, short)]
    target: Option<String>,
    #[arg(long, short)]
    error: Option<String>,
    /// Mellin-Sobolev smoothness of the target.
    #[arg(long)]
    s: Option<f64>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, short)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    cutoff: Option<CutoffChoice>,
    /// Multiplier of n^{1/(2s+2γ+1)} in the theory cut-off.
    #[arg(long)]
    k_scale: Option<f64>,
    #[arg(long)]
    slope_tol: Option<f64>,
    /// Check an exact power law instead of simulating.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

macro_rules! apply_grid {
    ($g:expr, $c:expr) => {{
        let g: GridArgs = $g;
        set!($c.x_min, g.x_min);
        set!($c.x_max, g.x_max);
        set!($c.x_points, g.x_points);
        set!($c.t_max, g.t_max);
        set!($c.t_step, g.t_step);
    }};
}

fn resolve(command: Option<Command>, file: Option<RunConfig>) -> Result<RunConfig, CliError> {
    let Some(command) = command else {
        return file.ok_or_else(|| CliError::Config("no subcommand and no --config given".into()));
    };
    let mismatch = |name: &str| {
        CliError::Config(format!(
            "--config describes `{name}` but another subcommand was requested"
        ))
    };
    Ok(match command {
        Command::Estimate(a) => {
            let mut c = match file {
                Some(RunConfig::Estimate(c)) => c,
                Some(other) => return Err(mismatch(other.command())),
                None => EstimateConfig::default(),
            };
            if a.input.is_some() {
                c.input = a.input;
            }
            if a.output.is_some() {
                c.output = a.output;
            }
            set!(c.error, a.error);
            set!(c.mode, a.mode);
            if a.chi.is_some() {
                c.chi = a.chi;
            }
            if a.k.is_some() {
                c.k = a.k;
            }
            if a.no_clip {
                c.clip_negative = false;
            }
            apply_grid!(a.grid, c);
            RunConfig::Estimate(c)
        }
        Command::Simulate(a) => {
            let mut c = match file {
                Some(RunConfig::Simulate(c)) => c,
                Some(other) => return Err(mismatch(other.command())),
                None => SimulateConfig::default(),
            };
            set!(c.target, a.target);
            set!(c.error, a.error);
            set!(c.n, a.n);
            set!(c.reps, a.reps);
            set!(c.mode, a.mode);
            if a.chi.is_some() {
                c.chi = a.chi;
            }
            if a.k.is_some() {
                c.k = a.k;
            }
            set!(c.seed, a.seed);
            if a.output.is_some() {
                c.output = a.output;
            }
            apply_grid!(a.grid, c);
            RunConfig::Simulate(c)
        }
        Command::Calibrate(a) => {
            let mut c = match file {
                Some(RunConfig::Calibrate(c)) => c,
                Some(other) => return Err(mismatch(other.command())),
                None => CalibrateConfig::default(),
            };
            set!(c.error, a.error);
            set!(c.chi_grid, a.chi_grid);
            set!(c.histograms, a.histograms);
            set!(c.reps, a.reps);
            set!(c.n, a.n);
            set!(c.span, a.span);
            set!(c.min_bins, a.min_bins);
            set!(c.max_bins, a.max_bins);
            set!(c.seed, a.seed);
            if a.output.is_some() {
                c.output = a.output;
            }
            apply_grid!(a.grid, c);
            RunConfig::Calibrate(c)
        }
        Command::Ratecheck(a) => {
            let mut c = match file {
                Some(RunConfig::Ratecheck(c)) => c,
                Some(other) => return Err(mismatch(other.command())),
                None => RatecheckConfig::default(),
            };
            set!(c.target, a.target);
            set!(c.error, a.error);
            set!(c.s, a.s);
            set!(c.n_list, a.n_list);
            set!(c.reps, a.reps);
            set!(c.seed, a.seed);
            set!(c.cutoff, a.cutoff);
            set!(c.k_scale, a.k_scale);
            set!(c.slope_tol, a.slope_tol);
            if a.synthetic {
                c.synthetic = true;
            }
            if a.output.is_some() {
                c.output = a.output;
            }
            apply_grid!(a.grid, c);
            RunConfig::Ratecheck(c)
        }
    })
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            Some(RunConfig::from_json(&text)?)
        }
        None => None,
    };
    let config = resolve(cli.command, file)?;
    if cli.dump_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    log::debug!("running {}", config.command());
    commands::run(&config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
