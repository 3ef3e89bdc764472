//! Scenario evaluation: optimal interrogation time, sensitivity reports, and
//! one-dimensional device sweeps.
//!
//! A [`ScenarioSpec`] pairs a device operating point with run choices (which
//! dephasing envelope to report, how far to search for the optimal revival,
//! the integration time for the headline resolution). [`evaluate_scenario`]
//! turns it into a [`ScenarioReport`]: the revival index `n*` that maximizes
//! information per unit wall-clock time, the Fisher information and
//! sensitivity there (realistic and decoherence-free), and a dense
//! [`MetrologyPoint`] time series suitable for plotting.
//!
//! All heavy lifting is closed-form (`closed_system`, `open_system`), so a
//! full report costs a few thousand scalar evaluations; rows are computed in
//! parallel anyway to keep large sweeps instant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::closed_system::{qfi_closed_form, HybridPureState};
use crate::open_system::{
    cfi_optimal_tau, effective_fisher_and_sensitivity, qfi_decohered_tau,
    qfi_geometric_model_tau, visibility_tau, DephasingModel, SensitivityError,
};
use crate::params::{derive_params, DerivedParams, DeviceInput, ParamError};
use crate::tau::Tau;

// ---------------------------------------------------------------------------
// Scenario definition
// ---------------------------------------------------------------------------

/// One named measurement campaign: a device plus evaluation choices.
///
/// Unknown keys are rejected on deserialization (see [`DeviceInput`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Label used in reports and error messages.
    pub name: String,
    /// Device operating point in laboratory units.
    pub device: DeviceInput,
    /// Mechanical decoherence envelope used for the `fq_decohered` column of
    /// the time series. The scalar report fields (`n_star`, `eta_g`, ...)
    /// always use the canonical reduced-state model so that headline numbers
    /// are model-independent.
    #[serde(default)]
    pub model: DephasingModel,
    /// Evaluate the decoherence-free column values (`Gamma_2 = 0`,
    /// `F_r = 1`) in place of the realistic ones. The report's dedicated
    /// `*_ideal` fields are unaffected by this switch.
    #[serde(default)]
    pub ideal: bool,
    /// Search bound for the optimal time, in half cycles of the mechanical
    /// period (candidate revivals are `tau = 2 pi l`, `2 l <=` this). Must be
    /// at least 2 so the search set is non-empty.
    #[serde(default = "default_n_half_cycle_max")]
    pub n_half_cycle_max: u32,
    /// Total integration time (s) for the headline resolution
    /// `delta_g = eta_g / sqrt(T_int)`. Must be positive.
    #[serde(default = "default_t_int_s", rename = "T_int_s")]
    pub t_int_s: f64,
    /// Time-series sampling density. [`evaluate_scenario`] densifies this to
    /// at least 40 points per period; [`metrology_series`] uses it as given.
    #[serde(default = "default_grid_per_period")]
    pub grid_per_period: u32,
    /// Time-series span in mechanical periods. Defaults to the optimal-time
    /// search window, `ceil(n_half_cycle_max / 2)`.
    #[serde(default)]
    pub periods: Option<u32>,
}

fn default_n_half_cycle_max() -> u32 {
    120
}

fn default_t_int_s() -> f64 {
    600.0
}

fn default_grid_per_period() -> u32 {
    40
}

impl ScenarioSpec {
    /// A spec with default evaluation choices (canonical model, realistic
    /// rates, 120 half-cycle search, 600 s integration, 40 points/period).
    pub fn new(name: impl Into<String>, device: DeviceInput) -> Self {
        ScenarioSpec {
            name: name.into(),
            device,
            model: DephasingModel::default(),
            ideal: false,
            n_half_cycle_max: default_n_half_cycle_max(),
            t_int_s: default_t_int_s(),
            grid_per_period: default_grid_per_period(),
            periods: None,
        }
    }

    /// Checks the evaluation choices (the device itself is validated by
    /// parameter derivation).
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |what: String| ScenarioError::InvalidSpec {
            scenario: self.name.clone(),
            what,
        };
        if self.n_half_cycle_max < 2 {
            return Err(invalid(format!(
                "n_half_cycle_max must be >= 2 so the search set is non-empty, got {}",
                self.n_half_cycle_max
            )));
        }
        if !(self.t_int_s.is_finite() && self.t_int_s > 0.0) {
            return Err(invalid(format!(
                "T_int_s must be finite and positive, got {:e}",
                self.t_int_s
            )));
        }
        if self.grid_per_period == 0 {
            return Err(invalid("grid_per_period must be >= 1".into()));
        }
        if self.periods == Some(0) {
            return Err(invalid("periods must be >= 1 when given".into()));
        }
        Ok(())
    }

    /// Number of periods the time series spans.
    fn effective_periods(&self) -> u32 {
        self.periods.unwrap_or_else(|| self.n_half_cycle_max.div_ceil(2))
    }
}

/// Errors from scenario evaluation and sweeps.
#[derive(Debug, Error)]
pub enum ScenarioError {
    /// The device operating point failed derivation.
    #[error("scenario `{scenario}`: {source}")]
    Params {
        scenario: String,
        #[source]
        source: ParamError,
    },
    /// The evaluation choices are unusable.
    #[error("scenario `{scenario}`: {what}")]
    InvalidSpec { scenario: String, what: String },
    /// A sensitivity evaluation failed (for example `F_r = 0.5` carries no
    /// information at any time).
    #[error("scenario `{scenario}` at t = {t_s:.6e} s: {source}")]
    Sensitivity {
        scenario: String,
        t_s: f64,
        #[source]
        source: SensitivityError,
    },
    /// Sweep axis name is not recognized.
    #[error("unknown sweep axis `{got}`; allowed axes: k, Q_m, T_bath, F_r, m_eff, f_m")]
    UnknownAxis { got: String },
    /// Sweep was requested with no axis values.
    #[error("sweep over `{axis}` has no values")]
    EmptySweep { axis: String },
}

// ---------------------------------------------------------------------------
// Optimal interrogation time
// ---------------------------------------------------------------------------

/// Result of the optimal-time search over revivals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalTime {
    /// Optimal half-cycle count `n* = tau*/pi` (always even: the search set
    /// is the revivals `tau = 2 pi l`).
    pub n_star: i64,
    /// Optimal laboratory time `t* = n* pi / omega_m` (s).
    pub t_star_s: f64,
    /// Canonical decohered QFI at `t*` (s^4/m^2).
    pub f_q: f64,
    /// Readout-degraded Fisher information `(2 F_r - 1)^2 F_Q` at `t*`.
    pub f_eff: f64,
    /// Per-root-Hz sensitivity `sqrt((t* + T_over)/F_eff)` (m s^-2 Hz^-1/2).
    pub eta_g: f64,
    /// True when the maximum sits on the last candidate, i.e. the search
    /// window clipped the optimum and `n_half_cycle_max` should be raised.
    pub at_search_boundary: bool,
}

/// Maximizes information per unit wall-clock time,
/// `F_eff(t) / (t + T_over)`, over the revival times
/// `t = 2 pi l / omega_m`, `1 <= l <= n_half_cycle_max / 2`.
///
/// Only revivals compete: between them the mechanical overlap suppresses the
/// coherence by `e^{-2 Lambda}`, so interior points never win for the
/// canonical model. Ties resolve toward the smaller time.
pub fn find_optimal_time(
    p: &DerivedParams,
    n_half_cycle_max: u32,
) -> Result<OptimalTime, SensitivityError> {
    let l_max = i64::from(n_half_cycle_max / 2);
    if l_max < 1 {
        return Err(SensitivityError::Domain {
            name: "n_half_cycle_max",
            requirement: ">= 2",
            value: f64::from(n_half_cycle_max),
        });
    }
    let theta = p.theta();
    let mut best: Option<(f64, i64, f64, f64, crate::open_system::Sensitivity)> = None;
    for l in 1..=l_max {
        let tau = Tau::from_cycles(l);
        let t_s = tau.seconds(p.omega_m);
        let f_q = qfi_decohered_tau(theta, tau, p);
        let sens = effective_fisher_and_sensitivity(f_q, p.input.f_r, t_s, p.input.t_over_s)?;
        let rate = sens.f_eff / (t_s + p.input.t_over_s);
        if best.as_ref().is_none_or(|(r, ..)| rate > *r) {
            best = Some((rate, l, t_s, f_q, sens));
        }
    }
    let (_, l_star, t_star_s, f_q, sens) = best.expect("search set is non-empty");
    Ok(OptimalTime {
        n_star: 2 * l_star,
        t_star_s,
        f_q,
        f_eff: sens.f_eff,
        eta_g: sens.eta_g,
        at_search_boundary: l_star == l_max,
    })
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

/// One row of the metrology time series. All fields are finite and
/// non-negative for a valid operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetrologyPoint {
    /// Laboratory time (s).
    pub t_s: f64,
    /// Dimensionless time in half cycles, `omega_m t / pi`.
    pub tau_over_pi: f64,
    /// Closed-system QFI (exact pure-state value; s^4/m^2).
    pub fq_closed: f64,
    /// Decohered QFI under the scenario's dephasing model (s^4/m^2).
    pub fq_decohered: f64,
    /// Optimal-quadrature Ramsey CFI for the canonical model (s^4/m^2).
    pub fc_max: f64,
    /// Ramsey fringe visibility `e^{-Lambda} e^{-Gamma_2 t}`.
    pub visibility: f64,
    /// Linear entropy of the reduced qubit in the closed system.
    pub sl: f64,
    /// Sensitivity if the sequence stopped at this row (canonical model,
    /// realistic readout; m s^-2 Hz^-1/2).
    pub eta_if_stopped: f64,
}

/// Effective parameter set and readout fidelity after the `ideal` switch.
fn run_point(spec: &ScenarioSpec, p: &DerivedParams) -> (DerivedParams, f64) {
    if spec.ideal {
        (p.with_zero_dephasing(), 1.0)
    } else {
        (*p, p.input.f_r)
    }
}

fn metrology_point(
    spec: &ScenarioSpec,
    p_run: &DerivedParams,
    f_r_run: f64,
    tau: Tau,
) -> Result<MetrologyPoint, ScenarioError> {
    let theta = p_run.theta();
    let alpha = p_run.alpha();
    let t_s = tau.seconds(p_run.omega_m);
    let fq_decohered = match spec.model {
        DephasingModel::PolaronLab => qfi_decohered_tau(theta, tau, p_run),
        variant => qfi_geometric_model_tau(theta, tau, p_run, variant),
    };
    let sens =
        effective_fisher_and_sensitivity(qfi_decohered_tau(theta, tau, p_run), f_r_run, t_s, p_run.input.t_over_s)
            .map_err(|source| ScenarioError::Sensitivity {
                scenario: spec.name.clone(),
                t_s,
                source,
            })?;
    Ok(MetrologyPoint {
        t_s,
        tau_over_pi: tau.over_pi(),
        fq_closed: qfi_closed_form(theta, alpha, tau, p_run),
        fq_decohered,
        fc_max: cfi_optimal_tau(theta, tau, p_run).f_c,
        visibility: visibility_tau(tau, p_run),
        sl: HybridPureState::new(theta, alpha, tau, p_run).linear_entropy(),
        eta_if_stopped: sens.eta_g,
    })
}

/// Dense time series at `spec.grid_per_period` points per period over
/// `spec.periods` periods (default: the optimal-time search window).
///
/// The grid starts one step after `t = 0` (where the sensitivity diverges)
/// and ends exactly on the last period boundary, so `grid_per_period * periods`
/// rows come back, strictly increasing in `t`, with every half-period landing
/// on an exact [`Tau`] node.
pub fn metrology_series(spec: &ScenarioSpec) -> Result<Vec<MetrologyPoint>, ScenarioError> {
    spec.validate()?;
    let p = derive_params(&spec.device).map_err(|source| ScenarioError::Params {
        scenario: spec.name.clone(),
        source,
    })?;
    series_with(spec, &p, spec.grid_per_period, spec.effective_periods())
}

fn series_with(
    spec: &ScenarioSpec,
    p: &DerivedParams,
    grid_per_period: u32,
    periods: u32,
) -> Result<Vec<MetrologyPoint>, ScenarioError> {
    let (p_run, f_r_run) = run_point(spec, p);
    let steps = u64::from(grid_per_period) * u64::from(periods);
    (1..=steps)
        .into_par_iter()
        .map(|step| metrology_point(spec, &p_run, f_r_run, Tau::from_period_grid(step, grid_per_period)))
        .collect()
}

// ---------------------------------------------------------------------------
// Scenario report
// ---------------------------------------------------------------------------

/// Full evaluation of one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    /// Scenario label (copied from the scenario definition).
    pub name: String,
    /// Optimal half-cycle count `n* = tau*/pi` (even).
    pub n_star: i64,
    /// Optimal laboratory time `t* = n* pi / omega_m` (s).
    pub t_star_s: f64,
    /// True when the optimum sat on the search boundary.
    pub at_search_boundary: bool,
    /// Canonical decohered QFI at `t*` (ideal-switch applied).
    pub f_q_at_t_star: f64,
    /// `(2 F_r - 1)^2 F_Q` at `t*` (ideal-switch applied).
    pub f_eff: f64,
    /// Sensitivity at `t*` (ideal-switch applied; m s^-2 Hz^-1/2).
    pub eta_g: f64,
    /// Decoherence-free QFI at the same `t*` (`Gamma_2 = 0`).
    pub f_q_ideal_at_t_star: f64,
    /// Decoherence-free effective Fisher information (`F_r = 1`).
    pub f_eff_ideal: f64,
    /// Decoherence-free sensitivity at `t*`.
    pub eta_g_ideal: f64,
    /// Integration time used for the headline resolution (s).
    pub t_int_s: f64,
    /// Resolution after integrating for `t_int_s`: `eta_g / sqrt(T_int)`.
    pub delta_g_at_t_int: f64,
    /// Resolution at the fixed 100 s reference integration time,
    /// `eta_g / 10`. Quoted figures often use this normalization, so it is
    /// reported alongside `delta_g_at_t_int`; the two intentionally differ
    /// whenever `t_int_s != 100`.
    pub delta_g_at_100_s: f64,
    /// True when `t_int_s` is the 100 s reference, i.e. the two resolution
    /// fields agree.
    pub t_int_is_reference: bool,
    /// Dense metrology time series (at least 40 points per period).
    pub time_series: Vec<MetrologyPoint>,
}

/// Evaluates a scenario end to end: optimal time, realistic and
/// decoherence-free sensitivity at that time, headline resolutions, and the
/// dense time series.
pub fn evaluate_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport, ScenarioError> {
    spec.validate()?;
    let p = derive_params(&spec.device).map_err(|source| ScenarioError::Params {
        scenario: spec.name.clone(),
        source,
    })?;
    let (p_run, f_r_run) = run_point(spec, &p);

    let opt = find_optimal_time(&p_run, spec.n_half_cycle_max).map_err(|source| {
        ScenarioError::Sensitivity {
            scenario: spec.name.clone(),
            t_s: f64::NAN,
            source,
        }
    })?;
    // The `ideal` switch already zeroes the rates in `p_run`, but `f_r_run`
    // enters separately, so recompute the readout-degraded pair at t*.
    let sens = effective_fisher_and_sensitivity(opt.f_q, f_r_run, opt.t_star_s, p.input.t_over_s)
        .map_err(|source| ScenarioError::Sensitivity {
            scenario: spec.name.clone(),
            t_s: opt.t_star_s,
            source,
        })?;

    let p_ideal = p.with_zero_dephasing();
    let tau_star = Tau::from_half_cycles(opt.n_star);
    let f_q_ideal = qfi_decohered_tau(p.theta(), tau_star, &p_ideal);
    let sens_ideal = effective_fisher_and_sensitivity(f_q_ideal, 1.0, opt.t_star_s, p.input.t_over_s)
        .map_err(|source| ScenarioError::Sensitivity {
            scenario: spec.name.clone(),
            t_s: opt.t_star_s,
            source,
        })?;

    let time_series = series_with(spec, &p, spec.grid_per_period.max(40), spec.effective_periods())?;

    Ok(ScenarioReport {
        name: spec.name.clone(),
        n_star: opt.n_star,
        t_star_s: opt.t_star_s,
        at_search_boundary: opt.at_search_boundary,
        f_q_at_t_star: opt.f_q,
        f_eff: sens.f_eff,
        eta_g: sens.eta_g,
        f_q_ideal_at_t_star: f_q_ideal,
        f_eff_ideal: sens_ideal.f_eff,
        eta_g_ideal: sens_ideal.eta_g,
        t_int_s: spec.t_int_s,
        delta_g_at_t_int: sens.eta_g / spec.t_int_s.sqrt(),
        delta_g_at_100_s: sens.eta_g / 10.0,
        t_int_is_reference: spec.t_int_s == 100.0,
        time_series,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Device property varied in a one-dimensional sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Dimensionless coupling `k = g0/omega_m`, applied through
    /// `g0/2pi = k f_m`.
    #[serde(rename = "k")]
    CouplingK,
    /// Mechanical quality factor.
    #[serde(rename = "Q_m")]
    QualityFactor,
    /// Bath temperature (K).
    #[serde(rename = "T_bath")]
    BathTemperature,
    /// Single-shot readout fidelity.
    #[serde(rename = "F_r")]
    ReadoutFidelity,
    /// Effective motional mass (kg).
    #[serde(rename = "m_eff")]
    EffectiveMass,
    /// Mechanical resonance frequency (Hz).
    #[serde(rename = "f_m")]
    MechanicalFrequency,
}

impl SweepAxis {
    /// Stable machine name (used by CLI flags and config files).
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::CouplingK => "k",
            SweepAxis::QualityFactor => "Q_m",
            SweepAxis::BathTemperature => "T_bath",
            SweepAxis::ReadoutFidelity => "F_r",
            SweepAxis::EffectiveMass => "m_eff",
            SweepAxis::MechanicalFrequency => "f_m",
        }
    }

    fn apply(&self, device: &mut DeviceInput, value: f64) {
        match self {
            SweepAxis::CouplingK => device.g0_over_2pi_hz = value * device.f_m_hz,
            SweepAxis::QualityFactor => device.q_m = value,
            SweepAxis::BathTemperature => device.t_bath_k = value,
            SweepAxis::ReadoutFidelity => device.f_r = value,
            SweepAxis::EffectiveMass => device.m_eff_kg = value,
            SweepAxis::MechanicalFrequency => device.f_m_hz = value,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k" => Ok(SweepAxis::CouplingK),
            "Q_m" => Ok(SweepAxis::QualityFactor),
            "T_bath" => Ok(SweepAxis::BathTemperature),
            "F_r" => Ok(SweepAxis::ReadoutFidelity),
            "m_eff" => Ok(SweepAxis::EffectiveMass),
            "f_m" => Ok(SweepAxis::MechanicalFrequency),
            other => Err(ScenarioError::UnknownAxis { got: other.into() }),
        }
    }
}

/// One row of a sweep: figures of merit at a single axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// The swept axis value (units of the axis).
    pub value: f64,
    /// Largest decoherence-free revival QFI in the search window.
    pub fq_peak_ideal: f64,
    /// Largest decohered revival QFI in the search window (canonical model).
    pub fq_peak_decohered: f64,
    /// Fringe visibility at the first half cycle `tau = pi` (where the
    /// branches are farthest apart).
    pub visibility_tau_pi: f64,
    /// Sensitivity at the per-device optimal time.
    pub eta_g_at_opt: f64,
}

/// Evaluates the base scenario at each value of one device axis.
pub fn sweep(
    base: &ScenarioSpec,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>, ScenarioError> {
    base.validate()?;
    if values.is_empty() {
        return Err(ScenarioError::EmptySweep {
            axis: axis.as_str().into(),
        });
    }
    values
        .par_iter()
        .map(|&value| sweep_row(base, axis, value))
        .collect()
}

fn sweep_row(base: &ScenarioSpec, axis: SweepAxis, value: f64) -> Result<SweepRow, ScenarioError> {
    let mut device = base.device;
    axis.apply(&mut device, value);
    let p = derive_params(&device).map_err(|source| ScenarioError::Params {
        scenario: format!("{} [{} = {:e}]", base.name, axis, value),
        source,
    })?;
    let (p_run, _) = run_point(base, &p);
    let p_ideal = p.with_zero_dephasing();
    let theta = p.theta();

    let mut fq_peak_ideal = 0.0_f64;
    let mut fq_peak_decohered = 0.0_f64;
    for l in 1..=i64::from(base.n_half_cycle_max / 2) {
        let tau = Tau::from_cycles(l);
        fq_peak_ideal = fq_peak_ideal.max(qfi_decohered_tau(theta, tau, &p_ideal));
        fq_peak_decohered = fq_peak_decohered.max(qfi_decohered_tau(theta, tau, &p_run));
    }

    let opt = find_optimal_time(&p_run, base.n_half_cycle_max).map_err(|source| {
        ScenarioError::Sensitivity {
            scenario: format!("{} [{} = {:e}]", base.name, axis, value),
            t_s: f64::NAN,
            source,
        }
    })?;

    Ok(SweepRow {
        value,
        fq_peak_ideal,
        fq_peak_decohered,
        visibility_tau_pi: visibility_tau(Tau::from_half_cycles(1), &p_run),
        eta_g_at_opt: opt.eta_g,
    })
}
