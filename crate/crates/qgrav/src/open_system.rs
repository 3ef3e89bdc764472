//! Analytic open-system dynamics of the reduced qubit and the derived
//! metrology quantities.
//!
//! The reduced model tracks three ingredients on top of the closed-system
//! branch structure:
//!
//! - the mechanical dephasing envelope `Lambda(t) = 4k^2 (1 - cos omega_m t)`
//!   (periodic, vanishing at revivals),
//! - the accumulated interferometric phase
//!   `Phi_part(t) = -4 omega_m k Gbar t - 4 k^2 sin(omega_m t)
//!   + 4 k Gbar (1 - cos omega_m t)` (the bare `Omega_q t` precession is
//!   symbolic, as in [`crate::closed_system`]), whose gravity derivative
//!   `A(t) = 4 k gamma_lever (1 - cos omega_m t - omega_m t)` grows secularly,
//! - exponential decay at the total coherence rate `Gamma_2` and relaxation
//!   at `Gamma_1`.
//!
//! This reduction is *stroboscopic*: it is exact at revival times
//! `tau = 2 pi n`, where the interferometer is actually interrogated, and
//! approximate in between (see the oracle validation suite, which quantifies
//! both regimes). Alternative which-path decoherence envelopes from a
//! geometric-phase viewpoint are kept behind [`DephasingModel`], clearly
//! labeled and never silently merged with the canonical reduction.
//!
//! Every function takes either laboratory time `t` in seconds (contract
//! signatures) or an exact [`Tau`] (grid-exact variants, suffix `_tau`); the
//! second form keeps revival zeros exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::exp_neg;
use crate::params::DerivedParams;
use crate::tau::Tau;

use std::f64::consts::{FRAC_PI_2, PI};

// ---------------------------------------------------------------------------
// Reduced-state types
// ---------------------------------------------------------------------------

/// Reduced qubit density matrix; `rho10` is the conjugate of `rho01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitDensityMatrix {
    /// Ground-branch population `<0|rho|0>`.
    pub rho00: f64,
    /// Excited-branch population `<1|rho|1>`.
    pub rho11: f64,
    /// Coherence `<0|rho|1>`.
    pub rho01: Complex64,
}

impl QubitDensityMatrix {
    /// Bloch vector `(r_x, r_y, r_z)` with
    /// `rho = (I + r_x sigma_x + r_y sigma_y + r_z sigma_z)/2`.
    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            r_x: 2.0 * self.rho01.re,
            r_y: -2.0 * self.rho01.im,
            r_z: self.rho00 - self.rho11,
        }
    }

    /// `max(0, |rho01|^2 - rho00 rho11)`: how far the matrix is from
    /// positive semidefinite (0 for any physical state).
    pub fn positivity_defect(&self) -> f64 {
        (self.rho01.norm_sqr() - self.rho00 * self.rho11).max(0.0)
    }

    /// Trace distance to another qubit state:
    /// `(1/2) Tr|rho - sigma|` = sqrt(dp^2 + |dc|^2) for 2x2 Hermitian
    /// traceless differences with population gap `dp` and coherence gap `dc`.
    pub fn trace_distance(&self, other: &QubitDensityMatrix) -> f64 {
        let dp = self.rho11 - other.rho11;
        let dc = self.rho01 - other.rho01;
        (dp * dp + dc.norm_sqr()).sqrt()
    }
}

/// Bloch vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
}

impl BlochVector {
    /// Euclidean length (1 for pure states).
    pub fn norm(&self) -> f64 {
        (self.r_x * self.r_x + self.r_y * self.r_y + self.r_z * self.r_z).sqrt()
    }

    /// Dot product.
    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.r_x * other.r_x + self.r_y * other.r_y + self.r_z * other.r_z
    }
}

/// Selects one mechanical decoherence envelope (see
/// [`which_path_dephasing`]). The variants come from two distinct modeling
/// routes and intentionally do not agree; reports must label which one
/// produced a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DephasingModel {
    /// Squared coherence factor `e^{-2 Lambda(t)}` of the canonical
    /// reduction (zero-temperature branch overlap in the lab frame).
    #[default]
    #[serde(rename = "polaron")]
    PolaronLab,
    /// Thermal which-path envelope
    /// `exp[-16 k^2 (2 n_th + 1) sin^2(omega_m t / 2)]` (undamped loop).
    #[serde(rename = "thermal")]
    ThermalWhichPath,
    /// Thermal which-path envelope with mechanical damping:
    /// `exp[-2 |dalpha|^2 (2 n_th + 1)]` with
    /// `dalpha = 2k (1 - e^{-(gamma_m/2 + i omega_m) t})`.
    #[serde(rename = "thermal-damped")]
    ThermalWhichPathDamped,
}

impl DephasingModel {
    /// Stable machine name (used by CLI flags and config files).
    pub fn as_str(&self) -> &'static str {
        match self {
            DephasingModel::PolaronLab => "polaron",
            DephasingModel::ThermalWhichPath => "thermal",
            DephasingModel::ThermalWhichPathDamped => "thermal-damped",
        }
    }
}

impl std::str::FromStr for DephasingModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polaron" => Ok(DephasingModel::PolaronLab),
            "thermal" => Ok(DephasingModel::ThermalWhichPath),
            "thermal-damped" => Ok(DephasingModel::ThermalWhichPathDamped),
            other => Err(format!(
                "unknown dephasing model `{other}` (expected polaron | thermal | thermal-damped)"
            )),
        }
    }
}

impl std::fmt::Display for DephasingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// Envelopes and phases
// ---------------------------------------------------------------------------

/// Mechanical dephasing exponent `Lambda(tau) = 4 k^2 (1 - cos tau)`;
/// exactly 0 at revivals, bounded by `8 k^2`.
pub fn lambda_tau(tau: Tau, p: &DerivedParams) -> f64 {
    4.0 * p.k * p.k * tau.one_minus_cos()
}

/// [`lambda_tau`] at laboratory time `t` (s).
pub fn decoherence_envelope_lambda(t: f64, p: &DerivedParams) -> f64 {
    lambda_tau(Tau::from_radians(p.omega_m * t), p)
}

/// Accumulated interferometric phase, minus the symbolic `Omega_q t` term:
/// `Phi_part = -4 k Gbar tau - 4 k^2 sin tau + 4 k Gbar (1 - cos tau)` (rad).
///
/// Kept unreduced (no modulo) so that numerical derivatives are meaningful;
/// wrap with [`wrap_phase`] for display.
pub fn accumulated_phase_tau(tau: Tau, p: &DerivedParams) -> f64 {
    let kg = 4.0 * p.k * p.g_bar;
    -kg * tau.radians() - 4.0 * p.k * p.k * tau.sin() + kg * tau.one_minus_cos()
}

/// [`accumulated_phase_tau`] at laboratory time `t` (s).
pub fn accumulated_phase(t: f64, p: &DerivedParams) -> f64 {
    accumulated_phase_tau(Tau::from_radians(p.omega_m * t), p)
}

/// Gravity derivative of the accumulated phase,
/// `A(tau) = 4 k gamma_lever (1 - cos tau - tau)` (s^2/m). Negative for
/// `tau > 0`; `|A|` grows secularly and equals `8 pi k gamma_lever n` at the
/// `n`-th revival.
pub fn phase_sensitivity_tau(tau: Tau, p: &DerivedParams) -> f64 {
    4.0 * p.k * p.gamma_lever * (tau.one_minus_cos() - tau.radians())
}

/// [`phase_sensitivity_tau`] at laboratory time `t` (s).
pub fn phase_sensitivity(t: f64, p: &DerivedParams) -> f64 {
    phase_sensitivity_tau(Tau::from_radians(p.omega_m * t), p)
}

/// Wraps a phase into `(-pi, pi]` for display.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Reduced state and derived metrology quantities
// ---------------------------------------------------------------------------

/// Analytic reduced qubit state at time `tau`:
/// `rho11 = sin^2(theta/2) e^{-Gamma_1 t}`,
/// `rho01 = (1/2) sin(theta) e^{-Lambda - Gamma_2 t} e^{-i Phi_part}`.
pub fn lab_density_matrix_tau(theta: f64, tau: Tau, p: &DerivedParams) -> QubitDensityMatrix {
    let t = tau.seconds(p.omega_m);
    let half = 0.5 * theta;
    let rho11 = half.sin().powi(2) * exp_neg(p.gamma_1 * t);
    let mag = 0.5 * theta.sin() * exp_neg(lambda_tau(tau, p) + p.gamma_2 * t);
    let phase = -accumulated_phase_tau(tau, p);
    QubitDensityMatrix {
        rho00: 1.0 - rho11,
        rho11,
        rho01: Complex64::from_polar(mag, phase),
    }
}

/// [`lab_density_matrix_tau`] at laboratory time `t` (s).
pub fn lab_density_matrix(theta: f64, t: f64, p: &DerivedParams) -> QubitDensityMatrix {
    lab_density_matrix_tau(theta, Tau::from_radians(p.omega_m * t), p)
}

/// Residual fringe contrast relative to `sin(theta)`:
/// `e^{-Lambda(tau)} e^{-Gamma_2 t}`.
pub fn visibility_tau(tau: Tau, p: &DerivedParams) -> f64 {
    exp_neg(lambda_tau(tau, p) + p.gamma_2 * tau.seconds(p.omega_m))
}

/// [`visibility_tau`] at laboratory time `t` (s).
pub fn visibility(t: f64, p: &DerivedParams) -> f64 {
    visibility_tau(Tau::from_radians(p.omega_m * t), p)
}

/// Decohered quantum Fisher information (canonical reduction):
/// `F_Q = sin^2(theta) e^{-2 Lambda - 2 Gamma_2 t} A(tau)^2` (s^4/m^2).
pub fn qfi_decohered_tau(theta: f64, tau: Tau, p: &DerivedParams) -> f64 {
    let t = tau.seconds(p.omega_m);
    let a = phase_sensitivity_tau(tau, p);
    let envelope = exp_neg(2.0 * (lambda_tau(tau, p) + p.gamma_2 * t));
    theta.sin().powi(2) * envelope * a * a
}

/// [`qfi_decohered_tau`] at laboratory time `t` (s).
pub fn qfi_decohered(theta: f64, t: f64, p: &DerivedParams) -> f64 {
    qfi_decohered_tau(theta, Tau::from_radians(p.omega_m * t), p)
}

/// Classical Fisher information of Ramsey readout at local-oscillator phase
/// `phi_lo`:
///
/// `F_C = r_perp^2 A^2 sin^2(Phi + phi_lo) / (1 - r_perp^2 cos^2(Phi + phi_lo))`
///
/// with `r_perp = sin(theta) e^{-Lambda - Gamma_2 t}` and `Phi = Phi_part`.
/// The underlying outcome probability is
/// `p_+ = (1 + r_perp cos(Phi + phi_lo)) / 2`.
pub fn cfi_ramsey_tau(theta: f64, tau: Tau, phi_lo: f64, p: &DerivedParams) -> f64 {
    let t = tau.seconds(p.omega_m);
    let r = theta.sin() * exp_neg(lambda_tau(tau, p) + p.gamma_2 * t);
    let a = phase_sensitivity_tau(tau, p);
    let psi = accumulated_phase_tau(tau, p) + phi_lo;
    let (s, c) = psi.sin_cos();
    let den = 1.0 - (r * c) * (r * c);
    if den <= 0.0 {
        // Reachable only for a fully coherent state measured along its own
        // axis; the continuous extension of sin^2/(1 - cos^2) there is 1.
        return r * r * a * a;
    }
    (r * a * s).powi(2) / den
}

/// [`cfi_ramsey_tau`] at laboratory time `t` (s).
pub fn cfi_ramsey(theta: f64, t: f64, phi_lo: f64, p: &DerivedParams) -> f64 {
    cfi_ramsey_tau(theta, Tau::from_radians(p.omega_m * t), phi_lo, p)
}

/// Result of optimizing the Ramsey readout phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfiOptimal {
    /// Optimal local-oscillator phase `pi/2 - Phi_part` (unreduced; the CFI
    /// is pi-periodic in `phi_lo`).
    pub phi_lo_star: f64,
    /// Maximized classical Fisher information `r_perp^2 A^2`; saturates the
    /// mixed-state quantum bound of the reduced qubit.
    pub f_c: f64,
    /// The historically quoted expression `r_perp^2 A^2 / (1 - r_perp^2)`,
    /// preserved verbatim for reference. Exceeds the quantum bound whenever
    /// `r_perp > 0`; never used in sensitivity figures. `INFINITY` when
    /// `r_perp = 1`.
    pub as_reported: f64,
    /// True when `as_reported` exceeds the decohered QFI at the same point
    /// (always, except at zero signal); consumers must surface this flag
    /// next to the value.
    pub as_reported_exceeds_qfi: bool,
}

/// Maximizes [`cfi_ramsey_tau`] over the readout phase: the optimum sits at
/// quadrature, `Phi + phi_lo = pi/2`, where `F_C = r_perp^2 A^2`.
pub fn cfi_optimal_tau(theta: f64, tau: Tau, p: &DerivedParams) -> CfiOptimal {
    let t = tau.seconds(p.omega_m);
    let r = theta.sin() * exp_neg(lambda_tau(tau, p) + p.gamma_2 * t);
    let a = phase_sensitivity_tau(tau, p);
    let f_c = r * r * a * a;
    let one_minus_r2 = (1.0 - r) * (1.0 + r);
    let as_reported = if one_minus_r2 <= 0.0 { f64::INFINITY } else { f_c / one_minus_r2 };
    let qfi = qfi_decohered_tau(theta, tau, p);
    CfiOptimal {
        phi_lo_star: FRAC_PI_2 - accumulated_phase_tau(tau, p),
        f_c,
        as_reported,
        as_reported_exceeds_qfi: as_reported > qfi,
    }
}

/// [`cfi_optimal_tau`] at laboratory time `t` (s).
pub fn cfi_optimal(theta: f64, t: f64, p: &DerivedParams) -> CfiOptimal {
    cfi_optimal_tau(theta, Tau::from_radians(p.omega_m * t), p)
}

/// Mechanical which-path decoherence factor `D in [0, 1]` for the selected
/// model (squared-coherence convention; multiplies a Fisher information).
/// Underflows cleanly to 0 for strongly distinguishing environments.
pub fn which_path_dephasing_tau(tau: Tau, p: &DerivedParams, variant: DephasingModel) -> f64 {
    let k2 = p.k * p.k;
    let thermal = 2.0 * p.n_th + 1.0;
    match variant {
        DephasingModel::PolaronLab => exp_neg(2.0 * lambda_tau(tau, p)),
        DephasingModel::ThermalWhichPath => {
            // 16 k^2 (2 n_th + 1) sin^2(tau/2) = 8 k^2 (2 n_th + 1)(1 - cos).
            exp_neg(8.0 * k2 * thermal * tau.one_minus_cos())
        }
        DephasingModel::ThermalWhichPathDamped => {
            // |dalpha|^2 = 4k^2 |1 - e^{-gamma_m t/2} e^{-i tau}|^2
            //            = 4k^2 [(1 - e^{-x})^2 + 2 e^{-x} (1 - cos tau)],
            // grouped to stay exact at revivals as x -> 0.
            let x = 0.5 * p.gamma_m * tau.seconds(p.omega_m);
            let one_minus_ex = -(-x).exp_m1();
            let sep = 4.0 * k2 * (one_minus_ex * one_minus_ex + 2.0 * exp_neg(x) * tau.one_minus_cos());
            exp_neg(2.0 * sep * thermal)
        }
    }
}

/// [`which_path_dephasing_tau`] at laboratory time `t` (s).
pub fn which_path_dephasing(t: f64, p: &DerivedParams, variant: DephasingModel) -> f64 {
    which_path_dephasing_tau(Tau::from_radians(p.omega_m * t), p, variant)
}

/// Geometric-phase model of the decohered QFI, kept distinct from
/// [`qfi_decohered`]:
/// `F = sin^2(theta) D_mech(t) e^{-Gamma_2 t} [2 k gamma_lever (tau - sin tau)]^2`.
///
/// Note the model as written uses a *single* power of `e^{-Gamma_2 t}` and a
/// phase derivative `2 k gamma_lever (tau - sin tau)` that is half the
/// canonical `|A|` at revivals; the two models therefore differ by a factor
/// ~4 there. They are exposed side by side, never merged.
pub fn qfi_geometric_model_tau(
    theta: f64,
    tau: Tau,
    p: &DerivedParams,
    variant: DephasingModel,
) -> f64 {
    let d_phi = 2.0 * p.k * p.gamma_lever * tau.minus_sin();
    let t = tau.seconds(p.omega_m);
    theta.sin().powi(2)
        * which_path_dephasing_tau(tau, p, variant)
        * exp_neg(p.gamma_2 * t)
        * d_phi
        * d_phi
}

/// [`qfi_geometric_model_tau`] at laboratory time `t` (s).
pub fn qfi_geometric_model(theta: f64, t: f64, p: &DerivedParams, variant: DephasingModel) -> f64 {
    qfi_geometric_model_tau(theta, Tau::from_radians(p.omega_m * t), p, variant)
}

// ---------------------------------------------------------------------------
// Sensitivity figure of merit
// ---------------------------------------------------------------------------

/// Effective Fisher information and per-root-Hz sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    /// `F_eff = (2 F_r - 1)^2 F_Q` (s^4/m^2).
    pub f_eff: f64,
    /// `eta_g = sqrt((t + T_over) / F_eff)` (m s^-2 / sqrt(Hz)).
    pub eta_g: f64,
}

/// Errors from the sensitivity figure of merit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SensitivityError {
    #[error("no information: effective Fisher information is zero (F_r = 0.5 or F_Q = 0)")]
    NoInformation,
    #[error("sensitivity argument `{name}` must be {requirement}, got {value:e}")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Folds readout fidelity into the Fisher information and converts to a
/// bandwidth-normalized sensitivity: `F_eff = (2 F_r - 1)^2 F_Q`,
/// `eta_g = sqrt((t + T_over)/F_eff)`.
pub fn effective_fisher_and_sensitivity(
    f_q: f64,
    f_r: f64,
    t: f64,
    t_over: f64,
) -> Result<Sensitivity, SensitivityError> {
    let dom = |name: &'static str, requirement: &'static str, value: f64| SensitivityError::Domain {
        name,
        requirement,
        value,
    };
    if !(f_q.is_finite() && f_q >= 0.0) {
        return Err(dom("F_Q", "finite and >= 0", f_q));
    }
    if !(f_r.is_finite() && (0.5..=1.0).contains(&f_r)) {
        return Err(dom("F_r", "within [0.5, 1]", f_r));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(dom("t", "finite and > 0", t));
    }
    if !(t_over.is_finite() && t_over >= 0.0) {
        return Err(dom("T_over", "finite and >= 0", t_over));
    }
    let readout = 2.0 * f_r - 1.0;
    let f_eff = readout * readout * f_q;
    if f_eff == 0.0 {
        return Err(SensitivityError::NoInformation);
    }
    Ok(Sensitivity {
        f_eff,
        eta_g: ((t + t_over) / f_eff).sqrt(),
    })
}

/// Single-ensemble resolution from `N` independent shots at effective Fisher
/// information `F_eff`: `delta_g_min = 1 / sqrt(N F_eff)`.
pub fn delta_g_min(f_eff: f64, shots: f64) -> f64 {
    1.0 / (shots * f_eff).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_params, DeviceInput};
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario_1_params() -> DerivedParams {
        derive_params(&presets::scenario_1()).unwrap()
    }

    fn with_gravity(g: f64) -> DerivedParams {
        let mut input = presets::scenario_1();
        input.g_m_per_s2 = g;
        derive_params(&input).unwrap()
    }

    #[test]
    fn lambda_reference_points() {
        let p = scenario_1_params();
        assert_relative_eq!(
            lambda_tau(Tau::from_half_cycles(1), &p),
            0.32,
            max_relative = 1e-12
        );
        assert_eq!(lambda_tau(Tau::from_cycles(5), &p), 0.0);
        let mut decoupled = presets::scenario_1();
        decoupled.g0_over_2pi_hz = 0.0;
        let p0 = derive_params(&decoupled).unwrap();
        assert_eq!(decoherence_envelope_lambda(1.23e-5, &p0), 0.0);
    }

    #[test]
    fn accumulated_phase_limits() {
        let p = with_gravity(0.0);
        for &t in &[1e-6, 4e-6, 9e-6] {
            let tau = p.omega_m * t;
            assert_relative_eq!(
                accumulated_phase(t, &p),
                -4.0 * p.k * p.k * tau.sin(),
                max_relative = 1e-10
            );
        }
        // Revivals: only the secular term survives.
        let pg = scenario_1_params();
        for n in [1_i64, 3, 26] {
            let tau = Tau::from_cycles(n);
            assert_relative_eq!(
                accumulated_phase_tau(tau, &pg),
                -8.0 * PI * n as f64 * pg.k * pg.g_bar,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn gravity_part_of_initial_phase_slope_is_frequency_renormalization() {
        // [Phi(t; g) - Phi(t; 0)]/t -> -4 omega_m k Gbar as t -> 0.
        let pg = scenario_1_params();
        let p0 = with_gravity(0.0);
        let expected = -4.0 * pg.omega_m * pg.k * pg.g_bar;
        let mut errors = Vec::new();
        for &t in &[1e-9, 1e-10, 1e-11] {
            let slope = (accumulated_phase(t, &pg) - accumulated_phase(t, &p0)) / t;
            errors.push((slope - expected).abs() / expected.abs());
        }
        // The finite-time correction is O(omega_m t / 2) and must shrink
        // linearly with t.
        assert!(errors[2] < 1e-5, "converged slope error too large: {errors:?}");
        assert!(errors[0] > 5.0 * errors[1] && errors[1] > 5.0 * errors[2]);
    }

    #[test]
    fn phase_sensitivity_reference_points() {
        let p = scenario_1_params();
        assert_eq!(phase_sensitivity_tau(Tau::ZERO, &p), 0.0);
        let a_rev = phase_sensitivity_tau(Tau::from_cycles(1), &p);
        assert_relative_eq!(a_rev.abs(), 8.0 * PI * p.k * p.gamma_lever, max_relative = 1e-12);
        assert_relative_eq!(a_rev.abs(), 1.60e4, max_relative = 1e-2);
        // Short-time linear slope: A(t)/t -> -4 k gamma omega_m.
        let t = 1e-10;
        assert_relative_eq!(
            phase_sensitivity(t, &p) / t,
            -4.0 * p.k * p.gamma_lever * p.omega_m,
            max_relative = 1e-4
        );
    }

    #[test]
    fn lab_density_matrix_reference_points() {
        let p = scenario_1_params();
        let theta = FRAC_PI_2;
        let rho0 = lab_density_matrix(theta, 0.0, &p);
        assert_relative_eq!(rho0.rho11, 0.5, max_relative = 1e-12);
        assert_relative_eq!(rho0.rho01.norm(), 0.5, max_relative = 1e-12);
        assert_eq!(rho0.positivity_defect(), 0.0);

        // Revival at t* = 260 us: Lambda = 0, so |rho01| = e^{-Gamma_2 t}/2.
        let t_star = Tau::from_half_cycles(52);
        let rho = lab_density_matrix_tau(theta, t_star, &p);
        assert_relative_eq!(rho.rho01.norm(), 0.5 * 6.009307399777e-1, max_relative = 1e-10);

        // Long-time fixed point.
        let late = lab_density_matrix(theta, 1.0e3, &p);
        assert_eq!(late.rho11, 0.0);
        assert_eq!(late.rho01.norm(), 0.0);
    }

    #[test]
    fn visibility_reference_points() {
        let p = scenario_1_params();
        assert_eq!(visibility(0.0, &p), 1.0);
        let ideal = p.with_zero_dephasing();
        assert_relative_eq!(
            visibility_tau(Tau::from_half_cycles(1), &ideal),
            (-0.32f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            visibility_tau(Tau::from_half_cycles(52), &p),
            6.009307399777e-1,
            max_relative = 1e-10
        );
    }

    #[test]
    fn qfi_decohered_matches_frozen_scenario_values() {
        let p1 = scenario_1_params();
        let t1 = Tau::from_half_cycles(52);
        assert_relative_eq!(
            qfi_decohered_tau(FRAC_PI_2, t1, &p1),
            6.248350102820e10,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            qfi_decohered_tau(FRAC_PI_2, t1, &p1.with_zero_dephasing()),
            1.730280505259e11,
            max_relative = 1e-10
        );
        let p2 = derive_params(&presets::scenario_2()).unwrap();
        let t2 = Tau::from_half_cycles(10);
        assert_relative_eq!(
            qfi_decohered_tau(FRAC_PI_2, t2, &p2),
            5.668761603352e12,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            qfi_decohered_tau(FRAC_PI_2, t2, &p2.with_zero_dephasing()),
            1.509190180567e13,
            max_relative = 1e-10
        );
    }

    #[test]
    fn envelope_consistency_from_component_operations() {
        let p = scenario_1_params();
        let theta = 1.1;
        for &t in &[3.7e-6, 1.1e-5, 2.6e-4] {
            let tau = Tau::from_radians(p.omega_m * t);
            let direct = qfi_decohered_tau(theta, tau, &p);
            let assembled = theta.sin().powi(2)
                * (-2.0 * (lambda_tau(tau, &p) + p.gamma_2 * tau.seconds(p.omega_m))).exp()
                * phase_sensitivity_tau(tau, &p).powi(2);
            assert_relative_eq!(direct, assembled, max_relative = 1e-12);
        }
    }

    #[test]
    fn qfi_decohered_degrades_with_each_decoherence_channel() {
        let base = presets::scenario_1();
        let t = 2.6e-4;
        let reference = qfi_decohered(FRAC_PI_2, t, &derive_params(&base).unwrap());
        type Mutation = Box<dyn Fn(&mut DeviceInput)>;
        let worsen: [(&str, Mutation); 3] = [
            ("T1", Box::new(|d: &mut DeviceInput| d.t1_s *= 0.5)),
            ("T_phi", Box::new(|d: &mut DeviceInput| d.t_phi_s *= 0.5)),
            ("T_bath", Box::new(|d: &mut DeviceInput| d.t_bath_k *= 2.0)),
        ];
        for (label, mutate) in worsen {
            let mut input = base;
            mutate(&mut input);
            let worse = qfi_decohered(FRAC_PI_2, t, &derive_params(&input).unwrap());
            assert!(
                worse < reference,
                "{label} degradation must reduce the decohered QFI"
            );
        }
    }

    #[test]
    fn cfi_reference_behaviour() {
        let p = scenario_1_params();
        let theta = FRAC_PI_2;
        let tau = Tau::from_radians(2.0);
        let t = tau.seconds(p.omega_m);
        let phi = accumulated_phase_tau(tau, &p);
        let r = theta.sin() * (-(lambda_tau(tau, &p) + p.gamma_2 * t)).exp();
        let a = phase_sensitivity_tau(tau, &p);
        // Quadrature: maximal information.
        assert_relative_eq!(
            cfi_ramsey_tau(theta, tau, FRAC_PI_2 - phi, &p),
            r * r * a * a,
            max_relative = 1e-12
        );
        // Aligned with the signal: no slope, no information.
        assert!(cfi_ramsey_tau(theta, tau, -phi, &p) < 1e-18 * r * r * a * a);
        // Fully dephased: nothing for any readout phase.
        let dead = lab_density_matrix(0.0, t, &p);
        assert_eq!(dead.rho01.norm(), 0.0);
        assert_eq!(cfi_ramsey_tau(0.0, tau, 0.7, &p), 0.0);
    }

    #[test]
    fn cfi_optimal_saturates_qfi_and_labels_as_reported() {
        let p = scenario_1_params();
        let tau = Tau::from_half_cycles(52);
        let opt = cfi_optimal_tau(FRAC_PI_2, tau, &p);
        let qfi = qfi_decohered_tau(FRAC_PI_2, tau, &p);
        assert_relative_eq!(opt.f_c, qfi, max_relative = 1e-12);
        // Optimal phase really is a maximum of the explicit form.
        assert_relative_eq!(
            cfi_ramsey_tau(FRAC_PI_2, tau, opt.phi_lo_star, &p),
            opt.f_c,
            max_relative = 1e-12
        );
        // Ratio to the quantum bound: 1/(1 - r_perp^2) at r_perp = 0.6009...
        let r = 6.009307399777e-1;
        assert_relative_eq!(opt.as_reported / qfi, 1.0 / (1.0 - r * r), max_relative = 1e-9);
        assert_relative_eq!(opt.as_reported / qfi, 1.57, max_relative = 1e-2);
        assert!(opt.as_reported_exceeds_qfi);
    }

    #[test]
    fn which_path_models_close_at_revivals_without_damping() {
        let mut input = presets::scenario_1();
        // Emulate gamma_m = 0 (infinite Q is rejected by validation).
        input.q_m = 1e300;
        let p = derive_params(&input).unwrap();
        let rev = Tau::from_cycles(3);
        for variant in [
            DephasingModel::PolaronLab,
            DephasingModel::ThermalWhichPath,
            DephasingModel::ThermalWhichPathDamped,
        ] {
            let d = which_path_dephasing_tau(rev, &p, variant);
            assert!((d - 1.0).abs() < 1e-12, "{variant} at revival: {d}");
        }
    }

    #[test]
    fn thermal_which_path_underflows_to_zero_not_nan() {
        let p = scenario_1_params(); // n_th ~ 4.2e3
        let d = which_path_dephasing_tau(Tau::from_half_cycles(1), &p, DephasingModel::ThermalWhichPath);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn damped_loop_residual_is_quadratic_in_gamma_t() {
        // At a revival the loop fails to close by |dalpha| ~ k gamma_m t, so
        // 1 - D grows quadratically in gamma_m t (power-law fit slope 2).
        let mut input = presets::scenario_1();
        input.t_bath_k = 0.0; // n_th = 0 keeps the prefactor simple
        let deficits: Vec<f64> = [1e4, 1e5]
            .iter()
            .map(|&q| {
                input.q_m = q;
                let p = derive_params(&input).unwrap();
                1.0 - which_path_dephasing_tau(Tau::from_cycles(1), &p, DephasingModel::ThermalWhichPathDamped)
            })
            .collect();
        let slope = (deficits[0] / deficits[1]).log10();
        assert!(
            (slope - 2.0).abs() < 0.01,
            "expected quadratic loop-opening residual, got slope {slope}"
        );
    }

    #[test]
    fn geometric_model_reference_points() {
        let p = scenario_1_params().with_zero_dephasing();
        let rev = Tau::from_cycles(1);
        let f = qfi_geometric_model_tau(FRAC_PI_2, rev, &p, DephasingModel::PolaronLab);
        assert_relative_eq!(
            f,
            16.0 * PI * PI * (p.k * p.gamma_lever).powi(2),
            max_relative = 1e-12
        );
        // One quarter of the canonical revival value.
        assert_relative_eq!(
            f,
            crate::closed_system::qfi_revival(1, FRAC_PI_2, &p) / 4.0,
            max_relative = 1e-12
        );
        let mut decoupled = presets::scenario_1();
        decoupled.g0_over_2pi_hz = 0.0;
        let p0 = derive_params(&decoupled).unwrap();
        assert_eq!(qfi_geometric_model(FRAC_PI_2, 1e-5, &p0, DephasingModel::PolaronLab), 0.0);
    }

    #[test]
    fn sensitivity_reference_points_and_errors() {
        // Frozen Scenario I realistic values.
        let s = effective_fisher_and_sensitivity(6.248350102820e10, 0.995, 2.6e-4, 0.0).unwrap();
        assert_relative_eq!(s.eta_g, 6.515815847063e-8, max_relative = 1e-10);
        // Perfect readout: F_eff = F_Q exactly.
        let s1 = effective_fisher_and_sensitivity(1.0e10, 1.0, 1e-4, 0.0).unwrap();
        assert_eq!(s1.f_eff, 1.0e10);
        assert_eq!(
            effective_fisher_and_sensitivity(1.0e10, 0.5, 1e-4, 0.0),
            Err(SensitivityError::NoInformation)
        );
        assert!(matches!(
            effective_fisher_and_sensitivity(1.0e10, 0.4, 1e-4, 0.0),
            Err(SensitivityError::Domain { name: "F_r", .. })
        ));
        assert!(matches!(
            effective_fisher_and_sensitivity(1.0e10, 0.9, 0.0, 0.0),
            Err(SensitivityError::Domain { name: "t", .. })
        ));
    }

    #[test]
    fn resolution_halves_when_shots_quadruple() {
        let f_eff = 3.7e10;
        for n in [1.0, 16.0, 1024.0] {
            assert_relative_eq!(
                delta_g_min(f_eff, 4.0 * n),
                0.5 * delta_g_min(f_eff, n),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn wrap_phase_stays_in_principal_branch() {
        for &phi in &[-123.0, -PI, 0.0, 1.0, PI, 12345.6] {
            let w = wrap_phase(phi);
            assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            // Same point on the circle.
            assert!(((phi - w) / (2.0 * PI) - ((phi - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn density_matrix_stays_positive(
            theta in 0.0..PI,
            t_us in 0.0..2000.0f64,
        ) {
            let p = scenario_1_params();
            let rho = lab_density_matrix(theta, t_us * 1e-6, &p);
            prop_assert!(rho.positivity_defect() <= 1e-15);
            prop_assert!((rho.rho00 + rho.rho11 - 1.0).abs() < 1e-12);
            prop_assert!(rho.bloch().norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn cfi_never_negative_and_bounded_by_optimum(
            theta in 0.0..PI,
            t_us in 0.1..500.0f64,
            phi in -7.0..7.0f64,
        ) {
            let p = scenario_1_params();
            let tau = Tau::from_radians(p.omega_m * t_us * 1e-6);
            let fc = cfi_ramsey_tau(theta, tau, phi, &p);
            let best = cfi_optimal_tau(theta, tau, &p).f_c;
            prop_assert!(fc >= 0.0);
            prop_assert!(fc <= best * (1.0 + 1e-9) + 1e-300);
        }
    }
}
