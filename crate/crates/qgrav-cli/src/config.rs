//! Run-configuration file model and command-line overrides.
//!
//! The configuration is a sectioned key-value file (TOML):
//!
//! ```toml
//! [run]                      # output choices (all optional)
//! format = "csv"             # csv | json
//! grid_per_period = 40       # applies to every scenario
//!
//! [oracle]                   # numerical cross-check overrides (optional)
//! n_max = 64
//!
//! [sweep]                    # required by the sweep command only
//! axis = "k"
//! values = [0.1, 0.2, 0.3]
//!
//! [[scenario]]               # one or more
//! name = "scenario1"
//! T_int_s = 600.0
//!
//! [scenario.device]          # keys carry explicit unit suffixes
//! f_m_hz = 1.0e5
//! m_eff_kg = 5.3e-10
//! g0_over_2pi_hz = 2.0e4
//! Q_m = 1.0e9
//! T_bath_k = 0.020
//! T1_s = 8.0e-4
//! T_phi_s = 1.5e-3
//! F_r = 0.995
//! ```
//!
//! Unknown keys are rejected everywhere so a misspelled unit suffix cannot
//! silently fall back to a default. Command-line flags override `[run]`
//! values, which in turn override per-scenario values.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::Deserialize;

use qgrav::scenario::{ScenarioSpec, SweepAxis};
use qgrav::validation::ValidationOptions;
use qgrav::DephasingModel;

use crate::CliError;

/// Whole configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output choices shared by every command.
    #[serde(default)]
    pub run: RunSection,
    /// Numerical cross-check overrides for the `validate` command.
    #[serde(default)]
    pub oracle: OracleSection,
    /// Axis selection for the `sweep` command.
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    /// Measurement campaigns; at least one is required by every command
    /// except `validate`.
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

/// `[run]` section: output and evaluation choices.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Output format; defaults per command (tables default to CSV).
    #[serde(default)]
    pub format: Option<OutputFormat>,
    /// Output path; stdout when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Time-series sampling density (points per mechanical period) applied
    /// to every scenario. Minimum 8.
    #[serde(default)]
    pub grid_per_period: Option<u32>,
    /// Time-series span (mechanical periods) applied to every scenario.
    #[serde(default)]
    pub periods: Option<u32>,
    /// Decoherence envelope for the `FQ_decohered` series column, applied to
    /// every scenario: polaron | thermal | thermal-damped.
    #[serde(default)]
    pub model: Option<DephasingModel>,
    /// Evaluate the decoherence-free limit (`Gamma_2 = 0`, `F_r = 1`).
    #[serde(default)]
    pub ideal: bool,
    /// Reserved for future sampled estimators. Every current computation is
    /// deterministic and ignores it; the key is accepted so configs stay
    /// forward-compatible.
    #[serde(default)]
    #[allow(dead_code)]
    pub seed: u64,
}

/// `[oracle]` section: overrides for the validation suite's numerics.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Forced Fock-space truncation (default: sized per check).
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Acceptable occupation leakage above the truncation edge.
    #[serde(default)]
    pub leakage_tol: Option<f64>,
    /// Finite-difference step (m s^-2) for the oracle's QFI estimate.
    #[serde(default)]
    pub delta_g: Option<f64>,
}

/// `[sweep]` section: one device axis and its values.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Axis name: k, Q_m, T_bath, F_r, m_eff, f_m.
    pub axis: String,
    /// Axis values in the axis' laboratory units (k is dimensionless).
    pub values: Vec<f64>,
}

/// Output encodings selectable via `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Comma-separated values: header row, LF line endings, scientific
    /// notation with nine significant digits.
    Csv,
    /// UTF-8 JSON with deterministic key order.
    Json,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub ideal: bool,
    pub model: Option<DephasingModel>,
    pub n_max: Option<usize>,
    pub grid: Option<u32>,
}

/// Configuration after the file and the flags have been merged and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Scenarios with `[run]`-section and flag overrides folded in.
    pub scenarios: Vec<ScenarioSpec>,
    /// Requested format, if any; each command picks its own default.
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    /// Sweep axis and values (`sweep` command only).
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
    /// Knobs for the validation suite.
    pub validation: ValidationOptions,
}

/// Reads and parses the configuration file. Parse errors keep the TOML
/// line/key context.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Merges the file with the command-line overrides and enforces the
/// config-level invariants (grid density, model/axis names).
pub fn resolve(config: RunConfig, over: &Overrides) -> Result<Resolved, CliError> {
    let RunConfig {
        run,
        oracle,
        sweep,
        mut scenarios,
    } = config;

    let grid = over.grid.or(run.grid_per_period);
    let model = over.model.or(run.model);
    let ideal = over.ideal || run.ideal;
    for spec in &mut scenarios {
        if let Some(g) = grid {
            spec.grid_per_period = g;
        }
        if let Some(p) = run.periods {
            spec.periods = Some(p);
        }
        if let Some(m) = model {
            spec.model = m;
        }
        if ideal {
            spec.ideal = true;
        }
        check_grid(spec)?;
    }

    let sweep = match sweep {
        None => None,
        Some(section) => {
            let axis = SweepAxis::from_str(&section.axis)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Some((axis, section.values))
        }
    };

    Ok(Resolved {
        scenarios,
        format: over.format.or(run.format),
        out: over.out.clone().or(run.out),
        sweep,
        validation: ValidationOptions {
            n_max: over.n_max.or(oracle.n_max),
            leakage_tol: oracle.leakage_tol.unwrap_or(1e-8),
            delta_g: oracle.delta_g,
            plant_defect: false,
        },
    })
}

/// Grid invariants: a zero-length time range is reported as an empty grid;
/// positive but too-sparse grids are rejected with the minimum.
fn check_grid(spec: &ScenarioSpec) -> Result<(), CliError> {
    if spec.grid_per_period == 0 || spec.periods == Some(0) {
        return Err(CliError::Config(format!(
            "scenario `{}`: empty grid (grid_per_period = {}, periods = {:?})",
            spec.name, spec.grid_per_period, spec.periods
        )));
    }
    if spec.grid_per_period < 8 {
        return Err(CliError::Config(format!(
            "scenario `{}`: grid_per_period must be >= 8, got {}",
            spec.name, spec.grid_per_period
        )));
    }
    Ok(())
}

/// Fails when a command that evaluates scenarios got a config without any.
pub fn require_scenarios(resolved: &Resolved) -> Result<(), CliError> {
    if resolved.scenarios.is_empty() {
        return Err(CliError::Config(
            "configuration must define at least one [[scenario]]".into(),
        ));
    }
    Ok(())
}
