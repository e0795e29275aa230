//! `ctic`: simulation, calibration and sweep pipelines over directed
//! networks, driven by a TOML config with command-line overrides.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Invocation;

const EXIT_CODES: &str = "\
Exit codes:
  0  all outputs written and verified
  1  internal failure during computation
  2  usage, config or input error (bad flag, unreadable or malformed file,
     invalid parameter, unknown preset)
  3  output error (directory or file could not be written or read back)";

#[derive(Parser, Debug)]
#[command(name = "ctic", version, about = "Continuous-time cascade simulation with interventions", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory [default: ctic-out/<command>].
    #[arg(short, long, global = true, env = "CTIC_OUT_DIR", value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, env = "CTIC_THREADS")]
    threads: Option<usize>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo runs (per cell for experiments).
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Override any config key, e.g. `--set simulate.eta=0.05`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only warnings and errors on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
enum Command {
    /// Cascades from the seed node: one activation list plus a Monte Carlo summary.
    Simulate,
    /// Strength grids against contagiousness, scale or timing.
    Sweep {
        #[arg(long)]
        preset: Option<String>,
    },
    /// Prebunk targeting strategies against random targeting.
    Targeting {
        #[arg(long)]
        preset: Option<String>,
    },
    /// Combined-intervention scenarios.
    Scenarios {
        #[arg(long)]
        preset: Option<String>,
    },
    /// Fit contagiousness and delay rate to observed cascades.
    CalibrateDiffusion,
    /// Estimate intervention strength from survey responses.
    CalibrateIntervention,
    /// Spectral radius, critical strengths and critical curves.
    Qmf,
    /// Report the seed node chosen for the configured graph.
    SeedSelect,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::Targeting { .. } => "targeting",
            Command::Scenarios { .. } => "scenarios",
            Command::CalibrateDiffusion => "calibrate-diffusion",
            Command::CalibrateIntervention => "calibrate-intervention",
            Command::Qmf => "qmf",
            Command::SeedSelect => "seed-select",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Compute,
    Input,
    Output,
}

impl Failure {
    fn code(self) -> u8 {
        match self {
            Failure::Compute => 1,
            Failure::Input => 2,
            Failure::Output => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    kind: Failure,
    error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: Failure, error: anyhow::Error) -> Self {
        CliError { kind, error }
    }

    pub fn input(error: anyhow::Error) -> Self {
        Self::new(Failure::Input, error)
    }

    pub fn context(self, c: &'static str) -> Self {
        CliError {
            kind: self.kind,
            error: self.error.context(c),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Tags a fallible step with its failure class.
pub trait ResultExt<T> {
    fn input(self) -> Result<T, CliError>;
    fn compute(self) -> Result<T, CliError>;
    fn output(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn input(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(Failure::Input, e.into()))
    }
    fn compute(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(Failure::Compute, e.into()))
    }
    fn output(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(Failure::Output, e.into()))
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) -> Result<usize, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .compute()?;
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: usize) -> Result<usize, CliError> {
    Ok(1)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = config::load(cli.config.as_deref(), &cli.set).input()?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let threads = init_threads(cfg.threads)?;
    let name = cli.command.name();
    let out_dir = cli
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("ctic-out").join(name));
    cfg.out_dir = Some(out_dir.clone());
    let preset_override = match &cli.command {
        Command::Sweep { preset } | Command::Targeting { preset } | Command::Scenarios { preset } => preset.clone(),
        _ => None,
    };
    let inv = Invocation {
        command: name,
        cfg,
        config_path: cli.config,
        out_dir,
        runs_override: cli.runs,
        preset_override,
        threads,
        started,
    };
    log::info!("{name}: seed {}, {threads} threads", inv.cfg.seed);
    match cli.command {
        Command::Simulate => commands::simulate(inv),
        Command::Sweep { .. } | Command::Targeting { .. } | Command::Scenarios { .. } => commands::experiment(inv),
        Command::CalibrateDiffusion => commands::calibrate_diffusion(inv),
        Command::CalibrateIntervention => commands::calibrate_intervention(inv),
        Command::Qmf => commands::qmf(inv),
        Command::SeedSelect => commands::seed_select(inv),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.quiet);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code())
        }
    }
}
