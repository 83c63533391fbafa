//! Command-line front end: `run`, `sweep` and `compare`, each writing CSV.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{ConfigError, Mode, RunConfig, ScenarioConfig};

use crate::master::{self, MasterError, Stepping};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cosim", version, about = "Jacobi co-simulation with adaptive macro steps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one co-simulation and write its time series.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one fixed-step co-simulation per macro step size.
    Sweep {
        config: PathBuf,
        /// Comma-separated macro step sizes [s].
        #[arg(long, value_delimiter = ',', required = true)]
        dt: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a co-simulation against the monolithic reference.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("diverged at t={0}")]
    Diverged(f64),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<MasterError> for CliError {
    fn from(e: MasterError) -> Self {
        match e {
            MasterError::Config(_) | MasterError::Graph(_) | MasterError::Bond(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Other(other.into()),
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(path)?.resolve()?)
}

fn destination(out: Option<PathBuf>, config: &RunConfig) -> Option<PathBuf> {
    out.or_else(|| config.output.clone())
}

/// Execute a parsed command; the returned error carries the exit code.
pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dest = destination(out, &cfg);
            let run = master::run(cfg.scenario_with(cfg.stepping())?)?;
            output::emit(dest.as_deref(), &cfg, |w| output::write_run(w, &run))?;
            match run.divergence {
                Some(d) => Err(CliError::Diverged(d.t)),
                None => Ok(()),
            }
        }
        Command::Sweep { config, dt, out } => {
            let cfg = load(&config)?;
            if dt.len() < 2 {
                return Err(CliError::Config(format!(
                    "--dt: a sweep needs at least two step sizes, got {}",
                    dt.len()
                )));
            }
            if let Some(bad) = dt.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                return Err(CliError::Config(format!("--dt: step sizes must be positive, got {bad}")));
            }
            let dest = destination(out, &cfg);
            let rows = master::sweep(
                |dt| cfg.scenario_with(Stepping::Fixed { dt }),
                &dt,
                true,
            )?;
            output::emit(dest.as_deref(), &cfg, |w| output::write_sweep(w, &rows))?;
            Ok(())
        }
        Command::Compare { config, out } => {
            let cfg = load(&config)?;
            let dest = destination(out, &cfg);
            let system = cfg.builtin_system();
            let run = master::run(cfg.scenario_with(cfg.stepping())?)?;
            let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
            let t_start = cfg.t_start.unwrap_or(0.0);
            let t_end = times.last().copied().unwrap_or(t_start);
            let reference = system
                .reference(t_start, t_end, &times)
                .map_err(|e| CliError::Other(e.into()))?;
            let cmp = master::compare_with_reference(&run.records, &reference)
                .map_err(|e| CliError::Other(e.into()))?;
            output::emit(dest.as_deref(), &cfg, |w| {
                output::write_comparison(w, &run, &cmp)
            })?;
            match run.divergence {
                Some(d) => Err(CliError::Diverged(d.t)),
                None => Ok(()),
            }
        }
    }
}

/// Parse `args` and run, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
