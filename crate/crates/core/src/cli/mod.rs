//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for usage and config errors, 3 when a
//! validation battery fails, 1 for anything else (I/O, model errors).

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::channel::{MacMode, SapRule};
use crate::error::Error;
use crate::montecarlo::with_workers;
use commands::Outputs;
use config::{load_config, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Environment variable that takes precedence over `--workers`.
pub const WORKERS_ENV: &str = "VANET_ADAPT_WORKERS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Validation(String),
    Model(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Model(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ssp,
    Sap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Equal,
    Differentiated,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form link success, expected slots and warning delays on a fixed chain.
    Analyze,
    /// Collision probability over a grid of access probabilities.
    Sweep {
        #[arg(value_enum)]
        kind: SweepArg,
    },
    /// Iterative Safe/Unsafe classification and its trace.
    Adapt,
    /// Oracle and invariant batteries.
    Validate,
}

#[derive(Debug, Parser)]
#[command(
    name = "vanet-adapt",
    version,
    about = "Safety-driven channel access for vehicular broadcast"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config, or a manifest written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Use 2p instead of 2p - p² for the SAP overlap.
    #[arg(long, global = true)]
    pub sap_approx: bool,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

impl Cli {
    /// Config file plus command-line overrides, validated.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut config = load_config(self.config.as_deref()).map_err(CliError::Config)?;
        if let Some(seed) = self.seed {
            config.scenario.seed = seed;
            config.validation.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.scenario.trials = trials;
        }
        if let Some(mode) = self.mode {
            config.scenario.channel.mode = match mode {
                ModeArg::Ssp => MacMode::Ssp,
                ModeArg::Sap => MacMode::Sap,
            };
        }
        if self.sap_approx {
            config.scenario.channel.sap_rule = SapRule::Approx;
        }
        config.validate().map_err(CliError::Config)?;
        Ok(config)
    }

    pub fn resolve_workers(&self) -> Result<Option<usize>, CliError> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|w| *w >= 1)
                .map(Some)
                .ok_or_else(|| {
                    CliError::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))
                }),
            _ => match self.workers {
                Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
                w => Ok(w),
            },
        }
    }

    fn command_name(&self) -> &'static str {
        match &self.command {
            Command::Analyze => "analyze",
            Command::Sweep {
                kind: SweepArg::Equal,
            } => "sweep equal",
            Command::Sweep {
                kind: SweepArg::Differentiated,
            } => "sweep differentiated",
            Command::Adapt => "adapt",
            Command::Validate => "validate",
        }
    }

    pub fn execute(&self) -> Result<(), CliError> {
        let config = self.resolve_config()?;
        let workers = self.resolve_workers()?;
        if self.sap_approx && config.scenario.channel.mode == MacMode::Ssp {
            eprintln!("warning: --sap-approx has no effect in ssp mode");
        }
        let mut out = Outputs::new(&self.out, self.command_name(), &config, workers)?;
        let validation_failed = with_workers(workers, || -> Result<bool, CliError> {
            match &self.command {
                Command::Analyze => commands::cmd_analyze(&config, &mut out)?,
                Command::Sweep {
                    kind: SweepArg::Equal,
                } => {
                    commands::cmd_sweep_equal(&config, &mut out)?;
                }
                Command::Sweep {
                    kind: SweepArg::Differentiated,
                } => {
                    commands::cmd_sweep_differentiated(&config, &mut out)?;
                }
                Command::Adapt => {
                    commands::cmd_adapt(&config, &mut out)?;
                }
                Command::Validate => {
                    let reports = commands::cmd_validate(&config, &mut out)?;
                    return Ok(reports.iter().any(|r| !r.ok()));
                }
            }
            Ok(false)
        })?;
        let manifest = out.finish()?;
        println!("manifest written to {}", manifest.display());
        if validation_failed {
            return Err(CliError::Validation("one or more batteries failed".into()));
        }
        Ok(())
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.execute() {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
