//! `qgrav`: command-line interface to the transmon-nanomechanical gravimeter
//! metrology engine.
//!
//! Subcommands: `derive` (parameter tables), `qfi` (Fisher-information time
//! series), `scenario` (optimal-time sensitivity reports), `sweep`
//! (one-axis device sweeps), `validate` (numerical cross-check suite).
//! Identical configuration always produces byte-identical output.
//!
//! Exit codes: 0 success; 2 configuration problems (parse errors, invalid
//! values, unusable evaluation choices); 3 file I/O; 4 validation failure;
//! 5 oracle resource exhaustion (for example truncation leakage).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use thiserror::Error;

use qgrav::oracle::OracleError;
use qgrav::DephasingModel;

use config::{load, resolve, Overrides, OutputFormat, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "qgrav",
    version,
    about = "Quantum-metrology engine for a flux-coupled transmon-nanomechanical gravimeter",
    after_help = "Exit codes: 2 configuration, 3 I/O, 4 validation failure, 5 oracle resource."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML). Required by every command except
    /// `validate`.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output format (default: csv for tables, plain text for validate).
    #[arg(long, global = true, value_enum, value_name = "FMT")]
    format: Option<OutputFormat>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Evaluate the decoherence-free limit: Gamma_2 = 0 and F_r = 1.
    #[arg(long, global = true)]
    ideal: bool,

    /// Decoherence envelope for the FQ_decohered series column.
    #[arg(long, global = true, value_name = "MODEL", value_parser = parse_model)]
    model: Option<DephasingModel>,

    /// Fock-space truncation override for validation cross-checks.
    #[arg(long = "nmax", global = true, value_name = "N")]
    n_max: Option<usize>,

    /// Time-series grid density (points per mechanical period, >= 8).
    #[arg(long, global = true, value_name = "N")]
    grid: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived device parameters, one row per scenario.
    Derive,
    /// Emit the metrology time series (QFI, CFI, visibility, entropy,
    /// sensitivity) per scenario.
    Qfi,
    /// Evaluate scenarios: optimal interrogation time, Fisher information,
    /// sensitivity, and integrated resolution.
    Scenario,
    /// Sweep one device axis ([sweep] section) of the first scenario.
    Sweep,
    /// Run the numerical cross-validation suite (closed forms vs the
    /// truncated-Fock oracle).
    Validate {
        /// Plant a wrong sign in one expected value; succeed only if the
        /// harness reports the failure.
        #[arg(long)]
        self_test: bool,
    },
}

fn parse_model(s: &str) -> Result<DephasingModel, String> {
    DephasingModel::from_str(s)
}

/// Top-level failure, mapped onto the documented exit codes.
#[derive(Debug, Error)]
enum CliError {
    /// Exit 2: anything wrong with the requested run — file syntax, unknown
    /// keys, invalid device values, unusable evaluation choices.
    #[error("configuration error: {0}")]
    Config(String),
    /// Exit 3: filesystem trouble, annotated with the path.
    #[error("i/o error on `{path}`")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Exit 4: the cross-validation suite reported failing rows.
    #[error("validation failed: {failed} of {total} checks")]
    ValidationFailed { failed: usize, total: usize },
    /// Exit 4: the planted self-test defect went unnoticed.
    #[error("self-test failed: the planted defect was not caught; the harness is broken")]
    SelfTestNotCaught,
    /// Exit 5: the numerical oracle hit a resource limit.
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::ValidationFailed { .. } | CliError::SelfTestNotCaught => 4,
            CliError::Oracle(_) => 5,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let needs_config = !matches!(cli.command, Command::Validate { .. });
    let config = match &cli.config {
        Some(path) => load(path)?,
        None if needs_config => {
            return Err(CliError::Config(
                "this command needs --config PATH".into(),
            ));
        }
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        format: cli.format,
        out: cli.out.clone(),
        ideal: cli.ideal,
        model: cli.model,
        n_max: cli.n_max,
        grid: cli.grid,
    };
    let resolved = resolve(config, &overrides)?;

    match cli.command {
        Command::Derive => commands::derive(&resolved),
        Command::Qfi => commands::qfi(&resolved),
        Command::Scenario => commands::scenario(&resolved),
        Command::Sweep => commands::sweep(&resolved),
        Command::Validate { self_test } => commands::validate(&resolved, self_test),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
