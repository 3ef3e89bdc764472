//! Cross-validation harness: every closed-form claim the engine relies on is
//! checked against an independent route (truncated-Fock propagation, the
//! Lindblad integrator, dense readout grids, frozen operating-point values)
//! and the result is reported as one named row with an explicit tolerance.
//!
//! The harness is wired into the CLI `validate` command and is intentionally
//! cheap (a few seconds); heavier versions of the same comparisons live in
//! the integration test suite. Overall status is the conjunction of all rows
//! so an inconsistent build cannot pass quietly.
//!
//! A self-test mode plants a wrong sign inside one expected value; a healthy
//! harness must then report a failure. This guards against the class of bug
//! where a comparison silently degenerates into `x == x`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_system::{qfi_closed_form, qfi_revival, HybridPureState};
use crate::constants::{HBAR, K_B};
use crate::open_system::{
    accumulated_phase_tau, cfi_optimal_tau, cfi_ramsey_tau, delta_g_min, lab_density_matrix_tau,
    lambda_tau, phase_sensitivity_tau, qfi_decohered_tau, qfi_geometric_model_tau, BlochVector,
    DephasingModel,
};
use crate::oracle::bloch::{cfi_readout_at, qfi_mixed_bloch};
use crate::oracle::fock::{n_max_thermal, n_max_with_gravity, FockState};
use crate::oracle::lindblad::{lindblad_evolve, LindbladOptions, LindbladRates, MechInit};
use crate::oracle::pure::{evolve_pure, qfi_pure_fd};
use crate::oracle::{OracleConfig, OracleError};
use crate::params::{derive_params, DerivedParams, DeviceInput};
use crate::presets;
use crate::scenario::find_optimal_time;
use crate::tau::Tau;

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// One named consistency check.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    /// Stable check identifier (kebab-case).
    pub name: &'static str,
    /// The identity or bound being verified, in plain formula language.
    pub anchor: &'static str,
    /// Largest error the check accepts.
    pub tolerance: f64,
    /// Largest error actually observed.
    pub achieved: f64,
    /// `achieved <= tolerance`.
    pub pass: bool,
}

/// Outcome of the full harness.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// True only when every row passes.
    pub pass: bool,
}

/// Harness knobs.
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Forced Fock truncation for the oracle-backed checks. `None` lets each
    /// check size its own basis. Deliberately small values (with the built-in
    /// `alpha = 2` stress point) must surface as a truncation-leakage error,
    /// not as silently wrong numbers.
    pub n_max: Option<usize>,
    /// Truncation-leakage budget passed to the oracle.
    pub leakage_tol: f64,
    /// Finite-difference step override (m s^-2) for the oracle-backed
    /// checks. `None` lets the oracle pick its own step.
    pub delta_g: Option<f64>,
    /// Self-test: flip the sign of one expected value so the harness must
    /// report a failure.
    pub plant_defect: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            n_max: None,
            leakage_tol: 1e-8,
            delta_g: None,
            plant_defect: false,
        }
    }
}

fn row(name: &'static str, anchor: &'static str, tolerance: f64, achieved: f64) -> ValidationRow {
    ValidationRow {
        name,
        anchor,
        tolerance,
        achieved,
        pass: achieved <= tolerance,
    }
}

fn rel_err(got: f64, expected: f64) -> f64 {
    (got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Synthetic operating points
// ---------------------------------------------------------------------------

/// Device with the requested dimensionless couplings and negligible
/// decoherence, built by inverting the derivation chain (`g0 = k f_m`, then
/// `g = Gbar / gamma_lever` from a probe pass).
fn coupling_device(k: f64, g_bar: f64, theta: f64, alpha: Complex64) -> DeviceInput {
    let f_m = 1.0e5;
    let mut device = DeviceInput {
        f_m_hz: f_m,
        m_eff_kg: 1.0e-12,
        g0_over_2pi_hz: k * f_m,
        q_m: 1.0e12,
        t_bath_k: 0.0,
        t1_s: 1.0e6,
        t_phi_s: 1.0e6,
        f_r: 0.999,
        theta_rad: theta,
        alpha_re: alpha.re,
        alpha_im: alpha.im,
        g_m_per_s2: 0.0,
        t_over_s: 0.0,
    };
    if g_bar != 0.0 {
        let probe = derive_params(&device).expect("synthetic probe device is valid");
        device.g_m_per_s2 = g_bar / probe.gamma_lever;
    }
    device
}

fn coupling_point(k: f64, g_bar: f64, theta: f64, alpha: Complex64) -> DerivedParams {
    derive_params(&coupling_device(k, g_bar, theta, alpha)).expect("synthetic device is valid")
}

/// Operating point for the dissipative comparison: moderate coupling, every
/// channel active at a rate large enough to matter over one period.
fn dissipative_device() -> DeviceInput {
    let f_m = 1.0e5;
    let omega_m = TAU * f_m;
    let mut device = DeviceInput {
        f_m_hz: f_m,
        m_eff_kg: 1.0e-12,
        g0_over_2pi_hz: 0.2 * f_m,
        q_m: 1.0e4,
        // Bath temperature chosen so n_th = 1/expm1(ln 1.5) = 2.
        t_bath_k: HBAR * omega_m / (K_B * 1.5_f64.ln()),
        t1_s: 1.0 / (0.01 * omega_m),
        t_phi_s: 1.0 / (0.01 * omega_m),
        f_r: 0.99,
        theta_rad: FRAC_PI_2,
        alpha_re: 0.0,
        alpha_im: 0.0,
        g_m_per_s2: 0.0,
        t_over_s: 0.0,
    };
    let probe = derive_params(&device).expect("dissipative probe device is valid");
    device.g_m_per_s2 = 0.5 / probe.gamma_lever;
    device
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Revival-time identity of the exact QFI, on a coupling/angle grid. The
/// closed form must be independent of the initial coherent amplitude, so two
/// different amplitudes are compared against the same expected value.
fn check_revival_identity(plant_defect: bool) -> ValidationRow {
    let ks = [0.05, 0.1, 0.2, 0.3, 0.4];
    let g_bars = [0.0, 0.5, 1.0, 1.5, 2.0];
    let thetas = [0.3, 0.9, FRAC_PI_2, 2.0, 2.6];
    let alphas = [Complex64::new(0.0, 0.0), Complex64::new(0.7, -0.3)];
    let mut worst = 0.0_f64;
    let mut first = true;
    for &k in &ks {
        for &g_bar in &g_bars {
            for &theta in &thetas {
                let p = coupling_point(k, g_bar, theta, Complex64::default());
                for n in 1..=3u32 {
                    let mut expected = qfi_revival(n, theta, &p);
                    if plant_defect && first {
                        expected = -expected;
                    }
                    first = false;
                    for &alpha in &alphas {
                        let got = qfi_closed_form(theta, alpha, Tau::from_cycles(n.into()), &p);
                        worst = worst.max(rel_err(got, expected));
                    }
                }
            }
        }
    }
    row(
        "revival-qfi-identity",
        "F_Q(2 pi n) = 256 pi^2 (gamma k)^2 p0 p1 n^2, independent of alpha and Gbar",
        1e-9,
        worst,
    )
}

/// One pure-state oracle comparison point: (k, Gbar, theta, alpha, tau).
type FdPoint = (f64, f64, f64, (f64, f64), f64);

/// Points for the pure-state oracle comparison. The `alpha = 2` entry doubles
/// as the truncation stress case: forcing a tiny basis through
/// [`ValidationOptions::n_max`] must raise a truncation-leakage error here.
const FD_POINTS: [FdPoint; 6] = [
    (0.10, 0.5, FRAC_PI_2, (0.8, 0.0), 1.3),
    (0.20, 1.0, 0.9, (0.5, -0.35), TAU),
    (0.30, 0.0, FRAC_PI_2, (0.0, 0.0), 4.0),
    (0.05, 2.0, 1.9, (1.2, 0.4), PI),
    (0.20, 0.5, FRAC_PI_2, (2.0, 0.0), 2.1),
    (0.15, 0.8, 2.4, (0.3, 0.9), 5.5),
];

fn check_fd_oracle(
    opts: &ValidationOptions,
) -> Result<(ValidationRow, ValidationRow), OracleError> {
    let cfg = OracleConfig {
        n_max: opts.n_max,
        leakage_tol: opts.leakage_tol,
        delta_g: opts.delta_g,
    };
    let mut worst = 0.0_f64;
    let mut worst_routes = 0.0_f64;
    for &(k, g_bar, theta, (re, im), tau) in &FD_POINTS {
        let alpha = Complex64::new(re, im);
        let p = coupling_point(k, g_bar, theta, alpha);
        let estimate = qfi_pure_fd(&p, tau, &cfg)?;
        let exact = qfi_closed_form(theta, alpha, Tau::from_radians(tau), &p);
        worst = worst.max(rel_err(estimate.value, exact));
        worst_routes = worst_routes.max(estimate.route_disagreement);
    }
    Ok((
        row(
            "closed-qfi-vs-fock-oracle",
            "finite-difference QFI of truncated-Fock propagation = closed form",
            1e-4,
            worst,
        ),
        row(
            "fd-route-agreement",
            "derivative-form and fidelity-form finite differences agree",
            1e-3,
            worst_routes,
        ),
    ))
}

fn check_truncation_convergence(opts: &ValidationOptions) -> Result<ValidationRow, OracleError> {
    let mut worst = 0.0_f64;
    for &(k, g_bar, theta, (re, im), tau) in &[FD_POINTS[0], FD_POINTS[4]] {
        let alpha = Complex64::new(re, im);
        let p = coupling_point(k, g_bar, theta, alpha);
        let n0 = opts
            .n_max
            .unwrap_or_else(|| n_max_with_gravity(alpha, p.k, p.g_bar));
        let run = |n_max: usize| {
            let cfg = OracleConfig {
                n_max: Some(n_max),
                leakage_tol: opts.leakage_tol,
                delta_g: opts.delta_g,
            };
            qfi_pure_fd(&p, tau, &cfg).map(|e| e.value)
        };
        worst = worst.max(rel_err(run(2 * n0)?, run(n0)?));
    }
    Ok(row(
        "fock-truncation-convergence",
        "doubling the Fock truncation leaves the oracle QFI unchanged",
        1e-6,
        worst,
    ))
}

/// Full dissipative model (thermal mechanics, every channel on) against two
/// analytic references:
///
/// - at the revival `tau = 2 pi`, the envelope-phase model, which is exact
///   there up to the secular mechanical-dephasing approximation folded into
///   `Gamma_2`;
/// - between revivals, the exact branch-overlap reduction: coherence phase
///   `4 k Gbar (tau - sin tau)` and thermal envelope
///   `e^{-(2 n_th + 1) Lambda}`. The envelope-phase model itself is
///   revival-calibrated (its phase and envelope agree with the exact
///   reduction only at `tau = 2 pi n`), so the interior must be checked
///   against the exact form, not the model.
///
/// Populations are exact exponentials throughout because every jump operator
/// is block-diagonal in the qubit.
fn check_lindblad_dissipative(
    opts: &ValidationOptions,
) -> Result<[ValidationRow; 3], OracleError> {
    let p = derive_params(&dissipative_device()).expect("dissipative device is valid");
    let rates = LindbladRates::from_params(&p);
    let n_max = opts
        .n_max
        .unwrap_or_else(|| n_max_thermal(p.n_th, p.k, p.g_bar));
    let lin_opts = LindbladOptions {
        leakage_tol: opts.leakage_tol,
        ..LindbladOptions::default()
    };
    let taus = [0.5 * PI, PI, 1.5 * PI, TAU];
    let states = lindblad_evolve(
        &p,
        &rates,
        p.theta(),
        &MechInit::Thermal(p.n_th),
        &taus,
        n_max,
        &lin_opts,
    )?;

    let theta = p.theta();
    let mut boundary = 0.0_f64;
    let mut interior = 0.0_f64;
    let mut populations = 0.0_f64;
    for (state, &tau) in states.iter().zip(&taus) {
        let q = state.reduced_qubit();
        let t = tau / p.omega_m;
        if tau == TAU {
            let analytic = lab_density_matrix_tau(theta, Tau::from_radians(tau), &p);
            boundary = boundary.max(q.trace_distance(&analytic));
        } else {
            let tau_exact = Tau::from_radians(tau);
            let envelope = (2.0 * p.n_th + 1.0) * lambda_tau(tau_exact, &p);
            let phase = 4.0 * p.k * p.g_bar * tau_exact.minus_sin();
            let exact = crate::open_system::QubitDensityMatrix {
                rho00: 1.0 - (0.5 * theta).sin().powi(2) * (-p.gamma_1 * t).exp(),
                rho11: (0.5 * theta).sin().powi(2) * (-p.gamma_1 * t).exp(),
                rho01: Complex64::from_polar(
                    0.5 * theta.sin() * (-envelope - p.gamma_2 * t).exp(),
                    phase,
                ),
            };
            interior = interior.max(q.trace_distance(&exact));
        }
        let expected_pop = (0.5 * theta).sin().powi(2) * (-p.gamma_1 * t).exp();
        populations = populations.max(rel_err(q.rho11, expected_pop));
    }
    Ok([
        row(
            "lindblad-revival-boundary",
            "dissipative propagation matches the envelope-phase state at tau = 2 pi (trace distance)",
            1e-3,
            boundary,
        ),
        row(
            "lindblad-interior-exact",
            "between revivals the coherence follows the branch-overlap phase 4 k Gbar (tau - sin tau) with thermal envelope e^{-(2 n_th + 1) Lambda} (trace distance)",
            5e-3,
            interior,
        ),
        row(
            "lindblad-populations",
            "rho_11 = sin^2(theta/2) e^{-Gamma_1 t} under every channel combination",
            1e-10,
            populations,
        ),
    ])
}

/// Decoupled limit: with `k = 0` the mechanics cannot distinguish the qubit
/// branches, so the reduced state must show bare `(Gamma_1, Gamma_2)` decay
/// with no phase, even with gravity driving the oscillator.
fn check_lindblad_zero_coupling(opts: &ValidationOptions) -> Result<ValidationRow, OracleError> {
    let mut device = coupling_device(0.0, 0.5, FRAC_PI_2, Complex64::default());
    let omega_m = TAU * device.f_m_hz;
    device.q_m = 1.0e4;
    device.t1_s = 1.0 / (0.02 * omega_m);
    device.t_phi_s = 1.0 / (0.015 * omega_m);
    let p = derive_params(&device).expect("zero-coupling device is valid");
    let n_th = 0.5;
    let rates = LindbladRates {
        n_th,
        ..LindbladRates::from_params(&p)
    };
    let n_max = opts.n_max.unwrap_or_else(|| n_max_thermal(n_th, p.k, p.g_bar));
    let taus = [2.0, TAU];
    let states = lindblad_evolve(
        &p,
        &rates,
        p.theta(),
        &MechInit::Thermal(n_th),
        &taus,
        n_max,
        &LindbladOptions {
            leakage_tol: opts.leakage_tol,
            ..LindbladOptions::default()
        },
    )?;
    let gamma_2 = 0.5 * rates.gamma_1 + 2.0 * rates.gamma_phi;
    let mut worst = 0.0_f64;
    for (state, &tau) in states.iter().zip(&taus) {
        let q = state.reduced_qubit();
        let t = tau / p.omega_m;
        worst = worst.max(rel_err(q.rho01.norm(), 0.5 * (-gamma_2 * t).exp()));
        worst = worst.max(rel_err(q.rho11, 0.5 * (-rates.gamma_1 * t).exp()));
        worst = worst.max(q.rho01.im.abs());
    }
    Ok(row(
        "lindblad-zero-coupling",
        "k = 0: reduced state decays at exactly (Gamma_1, Gamma_2) with no phase",
        1e-6,
        worst,
    ))
}

/// Zero-rate limit: the integrator must reproduce unitary joint propagation.
fn check_lindblad_unitary_limit(opts: &ValidationOptions) -> Result<ValidationRow, OracleError> {
    let alpha = Complex64::new(0.3, -0.2);
    let theta = 1.0;
    let p = coupling_point(0.2, 0.5, theta, alpha);
    let n_max = opts.n_max.unwrap_or(40);
    let taus = [0.9, 2.0, TAU];
    let states = lindblad_evolve(
        &p,
        &LindbladRates::zero(),
        theta,
        &MechInit::Coherent(alpha),
        &taus,
        n_max,
        &LindbladOptions {
            steps_per_period: 8192,
            leakage_tol: opts.leakage_tol,
            ..LindbladOptions::default()
        },
    )?;
    let init = FockState::from_qubit_and_coherent(theta, alpha, n_max, opts.leakage_tol)?;
    let mut worst = 0.0_f64;
    for (state, &tau) in states.iter().zip(&taus) {
        let pure = evolve_pure(&init, tau, &p, opts.leakage_tol)?;
        worst = worst.max(state.trace_distance_to_pure(&pure));
    }
    Ok(row(
        "lindblad-unitary-limit",
        "all channels off: joint state equals unitary propagation (trace distance)",
        1e-8,
        worst,
    ))
}

/// Rate bookkeeping at the two bundled operating points, against values
/// frozen when the derivation chain was first written down.
fn check_rate_composition() -> ValidationRow {
    let pins = [
        (presets::scenario_1(), 1.958752278421e3),
        (presets::scenario_2(), 1.958375227842e3),
    ];
    let mut worst = 0.0_f64;
    for (device, gamma_2_pin) in pins {
        let p = derive_params(&device).expect("bundled device is valid");
        let composed =
            0.5 * p.gamma_1 + 2.0 * (p.gamma_phi + p.gamma_m * p.k * p.k * (2.0 * p.n_th + 1.0));
        worst = worst.max(rel_err(p.gamma_2, composed));
        worst = worst.max(rel_err(p.gamma_2, gamma_2_pin));
        worst = worst.max(rel_err(p.gamma_phi_prime, p.gamma_phi + p.gamma_m * p.k * p.k * (2.0 * p.n_th + 1.0)));
    }
    row(
        "coherence-rate-composition",
        "Gamma_2 = Gamma_1/2 + 2 (Gamma_phi + gamma_m k^2 (2 n_th + 1)), frozen values",
        1e-9,
        worst,
    )
}

/// The decoherence-free and realistic reports at the optimal time must differ
/// by exactly the coherence-decay factor (the mechanical envelope vanishes at
/// revivals).
fn check_optimum_decay_ratio() -> ValidationRow {
    let mut worst = 0.0_f64;
    for device in [presets::scenario_1(), presets::scenario_2()] {
        let p = derive_params(&device).expect("bundled device is valid");
        let opt = find_optimal_time(&p, 120).expect("bundled optima exist");
        let tau_star = Tau::from_half_cycles(opt.n_star);
        let ideal = qfi_decohered_tau(p.theta(), tau_star, &p.with_zero_dephasing());
        worst = worst.max(rel_err(ideal / opt.f_q, (2.0 * p.gamma_2 * opt.t_star_s).exp()));
    }
    row(
        "optimum-decay-ratio",
        "decoherence-free / realistic QFI at t* = e^{2 Gamma_2 t*}",
        3e-2,
        worst,
    )
}

fn check_entropy_properties() -> [ValidationRow; 3] {
    // Zeros at revivals and the global bound.
    let mut zeros = 0.0_f64;
    let mut excess = 0.0_f64;
    for &k in &[0.05, 0.1, 0.2, 0.3] {
        for &theta in &[0.7, FRAC_PI_2, 2.1] {
            let alpha = Complex64::new(0.7, 0.2);
            let p = coupling_point(k, 0.6, theta, alpha);
            let half = 0.5 * theta;
            let bound = 2.0 * (half.cos() * half.sin()).powi(2);
            for n in 1..=4 {
                let s = HybridPureState::new(theta, alpha, Tau::from_cycles(n), &p).linear_entropy();
                zeros = zeros.max(s.abs());
            }
            for step in 1..=160u64 {
                let tau = Tau::from_period_grid(step, 80);
                let s = HybridPureState::new(theta, alpha, tau, &p).linear_entropy();
                excess = excess.max(s - bound);
            }
        }
    }

    // Peak location on a dense grid: max entanglement half way between
    // revivals, where the branch separation is largest.
    let grid = 500u32;
    let p = coupling_point(0.12, 0.4, FRAC_PI_2, Complex64::new(0.4, 0.0));
    let mut offset = 0.0_f64;
    for period in 0..2u64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for step in 0..u64::from(grid) {
            let tau = Tau::from_period_grid(period * u64::from(grid) + step + 1, grid);
            let s = HybridPureState::new(FRAC_PI_2, Complex64::new(0.4, 0.0), tau, &p)
                .linear_entropy();
            if s > best.0 {
                best = (s, tau.over_pi());
            }
        }
        let odd = 2.0 * period as f64 + 1.0;
        offset = offset.max((best.1 - odd).abs());
    }

    [
        row(
            "entropy-revival-zeros",
            "S_L(2 pi n) = 0: branches recombine exactly at revivals",
            1e-12,
            zeros,
        ),
        row(
            "entropy-upper-bound",
            "S_L <= 2 p0 p1 everywhere",
            1e-15,
            excess.max(0.0),
        ),
        row(
            "entropy-peak-location",
            "argmax S_L sits at odd multiples of pi (within one grid step)",
            2.0 / f64::from(grid),
            offset,
        ),
    ]
}

fn check_entropy_monotone_in_k() -> ValidationRow {
    let alpha = Complex64::default();
    let s: Vec<f64> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&k| {
            let p = coupling_point(k, 0.5, FRAC_PI_2, alpha);
            HybridPureState::new(FRAC_PI_2, alpha, Tau::from_half_cycles(1), &p).linear_entropy()
        })
        .collect();
    let worst_nonincrease = s
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    row(
        "entropy-peak-monotone-k",
        "peak S_L strictly increases with the coupling k",
        0.0,
        worst_nonincrease.max(0.0),
    )
}

/// Readout-phase grids: the analytic quadrature optimum must match a dense
/// grid maximum, and no readout phase may beat the mixed-state quantum bound
/// computed independently from the Bloch vector.
fn check_cfi_grids() -> [ValidationRow; 3] {
    let mut device = coupling_device(0.15, 0.8, 1.1, Complex64::new(0.6, 0.2));
    let omega_m = TAU * device.f_m_hz;
    device.t1_s = 1.0 / (0.002 * omega_m);
    device.t_phi_s = 1.0 / (0.003 * omega_m);
    let p = derive_params(&device).expect("readout-grid device is valid");
    let theta = p.theta();

    let n_grid = 10_000usize;
    let mut optimum_gap = 0.0_f64;
    let mut bound_excess = 0.0_f64;
    let mut flag_wrong = 0.0_f64;
    for &tau_raw in &[1.0, 2.6, PI, 5.0, TAU] {
        let tau = Tau::from_radians(tau_raw);
        let t = tau.seconds(p.omega_m);
        let optimal = cfi_optimal_tau(theta, tau, &p);

        // Bloch vector and its gravity derivative for the analytic reduced
        // state: the magnitude is g-independent, the phase moves at A(tau).
        let r_perp = theta.sin() * (-(lambda_tau(tau, &p) + p.gamma_2 * t)).exp();
        let phi = accumulated_phase_tau(tau, &p);
        let a = phase_sensitivity_tau(tau, &p);
        let r = lab_density_matrix_tau(theta, tau, &p).bloch();
        let dr = BlochVector {
            r_x: -r_perp * phi.sin() * a,
            r_y: r_perp * phi.cos() * a,
            r_z: 0.0,
        };
        let quantum_bound = qfi_mixed_bloch(&r, &dr).expect("state is strictly mixed here");

        let mut grid_max = f64::NEG_INFINITY;
        for i in 0..n_grid {
            let phi_lo = TAU * i as f64 / n_grid as f64;
            let f_c = cfi_ramsey_tau(theta, tau, phi_lo, &p);
            grid_max = grid_max.max(f_c);
            bound_excess = bound_excess.max((f_c - quantum_bound) / quantum_bound);
            // Same readout scanned through the independent Bloch route.
            let f_bloch = cfi_readout_at(&r, &dr, phi_lo);
            bound_excess = bound_excess.max((f_bloch - quantum_bound) / quantum_bound);
        }
        optimum_gap = optimum_gap.max(rel_err(grid_max, optimal.f_c));
        optimum_gap = optimum_gap.max(rel_err(optimal.f_c, quantum_bound));

        // The historically quoted expression must exceed the bound and carry
        // its warning flag wherever the signal is nonzero.
        let ok = optimal.as_reported_exceeds_qfi && optimal.as_reported > optimal.f_c;
        if !ok {
            flag_wrong = 1.0;
        }
    }
    [
        row(
            "cfi-quadrature-optimum",
            "max over phi_LO of the Ramsey CFI = r_perp^2 A^2, which saturates the quantum bound",
            1e-6,
            optimum_gap,
        ),
        row(
            "cfi-quantum-bound",
            "Ramsey CFI <= Bloch-vector mixed-state QFI at every phi_LO",
            1e-12,
            bound_excess.max(0.0),
        ),
        row(
            "cfi-overcount-flagged",
            "r_perp^2 A^2 / (1 - r_perp^2) exceeds the quantum bound and is flagged",
            0.5,
            flag_wrong,
        ),
    ]
}

/// Short-time scaling of the geometric-model QFI: with decay off,
/// `F ~ [2 k gamma (tau - sin tau)]^2 ~ t^6`.
fn check_short_time_slope() -> ValidationRow {
    let p = derive_params(&presets::scenario_1())
        .expect("bundled device is valid")
        .with_zero_dephasing();
    let n = 12;
    let (t_lo, t_hi) = (1.0e-8_f64, 1.0e-7_f64);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let t = t_lo * (t_hi / t_lo).powf(i as f64 / (n - 1) as f64);
        let f = qfi_geometric_model_tau(
            p.theta(),
            Tau::from_radians(p.omega_m * t),
            &p,
            DephasingModel::PolaronLab,
        );
        xs.push(t.ln());
        ys.push(f.ln());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&xs), mean(&ys));
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    row(
        "short-time-slope",
        "log-log slope of the decay-free geometric-model QFI is 6 at short times",
        5e-2,
        (slope - 6.0).abs(),
    )
}

fn check_square_law_and_shots() -> [ValidationRow; 2] {
    // Ideal revival QFI scales as k^2 at fixed lever arm.
    let f: Vec<f64> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&k| {
            let p = coupling_point(k, 0.5, FRAC_PI_2, Complex64::default());
            qfi_revival(1, FRAC_PI_2, &p)
        })
        .collect();
    let square_law = rel_err(f[1] / f[0], 4.0).max(rel_err(f[2] / f[0], 9.0));

    // Averaging is Gaussian: quadrupling the shot count halves the resolution.
    let mut shots = 0.0_f64;
    for &(f_eff, n) in &[(2.5e8, 100.0), (6.2e10, 1.0), (1.0e3, 7.0)] {
        shots = shots.max(rel_err(delta_g_min(f_eff, 4.0 * n), 0.5 * delta_g_min(f_eff, n)));
    }
    [
        row(
            "revival-square-law",
            "decay-free revival QFI ratios are 1 : 4 : 9 for k in {0.1, 0.2, 0.3}",
            1e-6,
            square_law,
        ),
        row(
            "shot-scaling",
            "delta_g_min halves when the shot count quadruples",
            1e-12,
            shots,
        ),
    ]
}

// ---------------------------------------------------------------------------
// Harness entry point
// ---------------------------------------------------------------------------

/// Runs every consistency check and collects the report. Oracle resource
/// failures (truncation leakage, step-limit exhaustion) abort the run as hard
/// errors: they mean the requested comparison was never made, which is
/// different from a comparison that failed.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport, OracleError> {
    let mut rows = Vec::with_capacity(16);
    rows.push(check_revival_identity(opts.plant_defect));
    let (fd, routes) = check_fd_oracle(opts)?;
    rows.push(fd);
    rows.push(routes);
    rows.push(check_truncation_convergence(opts)?);
    rows.extend(check_lindblad_dissipative(opts)?);
    rows.push(check_lindblad_zero_coupling(opts)?);
    rows.push(check_lindblad_unitary_limit(opts)?);
    rows.push(check_rate_composition());
    rows.push(check_optimum_decay_ratio());
    rows.extend(check_entropy_properties());
    rows.push(check_entropy_monotone_in_k());
    rows.extend(check_cfi_grids());
    rows.push(check_short_time_slope());
    rows.extend(check_square_law_and_shots());
    let pass = rows.iter().all(|r| r.pass);
    Ok(ValidationReport { rows, pass })
}
