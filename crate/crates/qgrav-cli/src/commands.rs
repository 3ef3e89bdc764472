//! The five subcommand implementations.
//!
//! Scenario evaluation and sweeps fan out over rayon (the library
//! parallelizes rows internally as well); output assembly is single-threaded
//! and ordered so files are byte-identical across runs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use qgrav::scenario::{
    evaluate_scenario, metrology_series, sweep as run_sweep, MetrologyPoint, ScenarioReport,
    ScenarioSpec,
};
use qgrav::validation::{run_validation, ValidationOptions, ValidationReport};
use qgrav::{derive_params, DerivedParams};

use crate::config::{require_scenarios, OutputFormat, Resolved};
use crate::output::{csv_document, emit, json_document, per_scenario_path, sci6, sci9};
use crate::CliError;

/// `FQ_decohered` uses the scenario's dephasing-model choice; every other
/// column is model-independent.
const QFI_COLUMNS: [&str; 8] = [
    "t_s",
    "tau_over_pi",
    "FQ_closed",
    "FQ_decohered",
    "FC_max",
    "visibility",
    "SL",
    "eta_if_stopped",
];

const SWEEP_COLUMNS: [&str; 5] = [
    "value",
    "FQ_peak_ideal",
    "FQ_peak_decohered",
    "visibility_tau_pi",
    "eta_g_at_opt",
];

const SCENARIO_COLUMNS: [&str; 14] = [
    "name",
    "n_star",
    "t_star_s",
    "at_search_boundary",
    "FQ_at_t_star",
    "F_eff",
    "eta_g",
    "FQ_ideal_at_t_star",
    "F_eff_ideal",
    "eta_g_ideal",
    "T_int_s",
    "delta_g_at_T_int",
    "delta_g_at_100_s",
    "t_int_is_reference",
];

const DERIVE_COLUMNS: [&str; 13] = [
    "name",
    "omega_m_rad_per_s",
    "period_s",
    "z_zpf_m",
    "gamma_lever_s2_per_m",
    "k",
    "Gbar",
    "n_th",
    "gamma_m_per_s",
    "Gamma_1_per_s",
    "Gamma_phi_per_s",
    "Gamma_phi_prime_per_s",
    "Gamma_2_per_s",
];

// ---------------------------------------------------------------------------
// derive
// ---------------------------------------------------------------------------

/// Derived quantities of one scenario, in SI units (JSON view).
#[derive(Debug, Serialize)]
struct DeriveRow {
    omega_m_rad_per_s: f64,
    period_s: f64,
    z_zpf_m: f64,
    gamma_lever_s2_per_m: f64,
    k: f64,
    g_bar: f64,
    n_th: f64,
    gamma_m_per_s: f64,
    gamma_1_per_s: f64,
    gamma_phi_per_s: f64,
    gamma_phi_prime_per_s: f64,
    gamma_2_per_s: f64,
}

impl From<&DerivedParams> for DeriveRow {
    fn from(p: &DerivedParams) -> Self {
        DeriveRow {
            omega_m_rad_per_s: p.omega_m,
            period_s: p.period_s,
            z_zpf_m: p.z_zpf,
            gamma_lever_s2_per_m: p.gamma_lever,
            k: p.k,
            g_bar: p.g_bar,
            n_th: p.n_th,
            gamma_m_per_s: p.gamma_m,
            gamma_1_per_s: p.gamma_1,
            gamma_phi_per_s: p.gamma_phi,
            gamma_phi_prime_per_s: p.gamma_phi_prime,
            gamma_2_per_s: p.gamma_2,
        }
    }
}

/// Prints the derived-parameter table: one row per scenario, fixed column
/// order, six significant digits (CSV) or full precision (JSON map keyed by
/// scenario name).
pub fn derive(resolved: &Resolved) -> Result<(), CliError> {
    require_scenarios(resolved)?;
    let mut derived = Vec::with_capacity(resolved.scenarios.len());
    for spec in &resolved.scenarios {
        let p = derive_params(&spec.device).map_err(|e| {
            CliError::Config(format!("scenario `{}`: {e}", spec.name))
        })?;
        derived.push((spec.name.as_str(), p));
    }

    let content = match resolved.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = derived
                .iter()
                .map(|(name, p)| {
                    let mut row = vec![(*name).to_string()];
                    row.extend(
                        [
                            p.omega_m,
                            p.period_s,
                            p.z_zpf,
                            p.gamma_lever,
                            p.k,
                            p.g_bar,
                            p.n_th,
                            p.gamma_m,
                            p.gamma_1,
                            p.gamma_phi,
                            p.gamma_phi_prime,
                            p.gamma_2,
                        ]
                        .map(sci6),
                    );
                    row
                })
                .collect();
            csv_document(&DERIVE_COLUMNS, &rows)
        }
        OutputFormat::Json => {
            let map: BTreeMap<&str, DeriveRow> = derived
                .iter()
                .map(|(name, p)| (*name, DeriveRow::from(p)))
                .collect();
            json_document(&map)?
        }
    };
    emit(resolved.out.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// qfi
// ---------------------------------------------------------------------------

fn qfi_csv(rows: &[MetrologyPoint]) -> String {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [
                r.t_s,
                r.tau_over_pi,
                r.fq_closed,
                r.fq_decohered,
                r.fc_max,
                r.visibility,
                r.sl,
                r.eta_if_stopped,
            ]
            .map(sci9)
            .to_vec()
        })
        .collect();
    csv_document(&QFI_COLUMNS, &records)
}

/// Emits the metrology time series (rows sorted by time) for every scenario.
pub fn qfi(resolved: &Resolved) -> Result<(), CliError> {
    require_scenarios(resolved)?;
    let series: Vec<(String, Vec<MetrologyPoint>)> = resolved
        .scenarios
        .par_iter()
        .map(|spec| {
            metrology_series(spec)
                .map(|rows| (spec.name.clone(), rows))
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    match resolved.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Json => {
            let map: BTreeMap<&str, &[MetrologyPoint]> = series
                .iter()
                .map(|(name, rows)| (name.as_str(), rows.as_slice()))
                .collect();
            emit(resolved.out.as_deref(), &json_document(&map)?)
        }
        OutputFormat::Csv if series.len() == 1 => {
            emit(resolved.out.as_deref(), &qfi_csv(&series[0].1))
        }
        OutputFormat::Csv => {
            let base = resolved.out.as_deref().ok_or_else(|| {
                CliError::Config(
                    "CSV output for multiple scenarios needs --out; \
                     each scenario is written to its own file"
                        .into(),
                )
            })?;
            for (name, rows) in &series {
                emit(Some(&per_scenario_path(base, name)), &qfi_csv(rows))?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// scenario
// ---------------------------------------------------------------------------

fn scenario_record(r: &ScenarioReport) -> Vec<String> {
    vec![
        r.name.clone(),
        r.n_star.to_string(),
        sci9(r.t_star_s),
        r.at_search_boundary.to_string(),
        sci9(r.f_q_at_t_star),
        sci9(r.f_eff),
        sci9(r.eta_g),
        sci9(r.f_q_ideal_at_t_star),
        sci9(r.f_eff_ideal),
        sci9(r.eta_g_ideal),
        sci9(r.t_int_s),
        sci9(r.delta_g_at_t_int),
        sci9(r.delta_g_at_100_s),
        r.t_int_is_reference.to_string(),
    ]
}

/// Evaluates every scenario: optimal interrogation time, realistic and
/// decoherence-free Fisher information and sensitivity, and the integrated
/// resolutions (both the configured `T_int` and the fixed 100 s reference).
pub fn scenario(resolved: &Resolved) -> Result<(), CliError> {
    require_scenarios(resolved)?;
    let reports: Vec<ScenarioReport> = resolved
        .scenarios
        .par_iter()
        .map(|spec| evaluate_scenario(spec).map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<_, _>>()?;

    for r in &reports {
        if r.at_search_boundary {
            eprintln!(
                "warning: scenario `{}`: the optimum sits on the search boundary \
                 (n* = {}); raise n_half_cycle_max to search further",
                r.name, r.n_star
            );
        }
    }

    let content = match resolved.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = reports.iter().map(scenario_record).collect();
            csv_document(&SCENARIO_COLUMNS, &rows)
        }
        OutputFormat::Json => {
            let map: BTreeMap<&str, &ScenarioReport> =
                reports.iter().map(|r| (r.name.as_str(), r)).collect();
            json_document(&map)?
        }
    };
    emit(resolved.out.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// JSON view of a sweep: the axis name plus one row per value.
#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    axis: &'a str,
    rows: &'a [qgrav::scenario::SweepRow],
}

/// Sweeps one device axis of the first scenario and tabulates peak Fisher
/// information, visibility at `tau = pi`, and optimal sensitivity per value.
pub fn sweep(resolved: &Resolved) -> Result<(), CliError> {
    require_scenarios(resolved)?;
    let (axis, values) = resolved.sweep.as_ref().ok_or_else(|| {
        CliError::Config(
            "the sweep command needs a [sweep] section with `axis` and `values`".into(),
        )
    })?;
    let base: &ScenarioSpec = &resolved.scenarios[0];
    let rows = run_sweep(base, *axis, values).map_err(|e| CliError::Config(e.to_string()))?;

    let content = match resolved.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let records: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    [
                        r.value,
                        r.fq_peak_ideal,
                        r.fq_peak_decohered,
                        r.visibility_tau_pi,
                        r.eta_g_at_opt,
                    ]
                    .map(sci9)
                    .to_vec()
                })
                .collect();
            csv_document(&SWEEP_COLUMNS, &records)
        }
        OutputFormat::Json => json_document(&SweepOutput {
            axis: axis.as_str(),
            rows: &rows,
        })?,
    };
    emit(resolved.out.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn validation_text(report: &ValidationReport) -> String {
    let mut out = String::new();
    for r in &report.rows {
        let status = if r.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{status} {name:<32} achieved {a:>10}  tolerance {t:>10}  {anchor}\n",
            name = r.name,
            a = format!("{:.3e}", r.achieved),
            t = format!("{:.3e}", r.tolerance),
            anchor = r.anchor,
        ));
    }
    let passed = report.rows.iter().filter(|r| r.pass).count();
    out.push_str(&format!(
        "overall: {} ({passed}/{} checks)\n",
        if report.pass { "PASS" } else { "FAIL" },
        report.rows.len(),
    ));
    out
}

/// Runs the cross-validation suite and reports one line per check.
///
/// In self-test mode a wrong sign is planted in one expected value; the
/// command then succeeds precisely when the harness catches it (reports a
/// failing row), and fails when the corruption goes unnoticed.
pub fn validate(resolved: &Resolved, self_test: bool) -> Result<(), CliError> {
    let opts = ValidationOptions {
        plant_defect: self_test,
        ..resolved.validation
    };
    let report = run_validation(&opts)?;

    let content = match resolved.format {
        None => validation_text(&report),
        Some(OutputFormat::Json) => json_document(&report)?,
        Some(OutputFormat::Csv) => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.to_string(),
                        format!("{:.3e}", r.tolerance),
                        format!("{:.3e}", r.achieved),
                        r.pass.to_string(),
                        r.anchor.to_string(),
                    ]
                })
                .collect();
            csv_document(&["name", "tolerance", "achieved", "pass", "anchor"], &rows)
        }
    };
    emit(resolved.out.as_deref(), &content)?;

    let failed = report.rows.iter().filter(|r| !r.pass).count();
    if self_test {
        if report.pass {
            return Err(CliError::SelfTestNotCaught);
        }
        eprintln!("self-test: planted defect caught ({failed} failing row(s), as intended)");
        return Ok(());
    }
    if !report.pass {
        return Err(CliError::ValidationFailed {
            failed,
            total: report.rows.len(),
        });
    }
    Ok(())
}
