//! Device inputs, validation, and the derived-parameter chain.
//!
//! Inputs are given in laboratory units (Hz, kg, K, s, rad); the single
//! Hz → rad/s conversion happens in [`derive_params`]. Everything downstream
//! works with angular frequencies and the dimensionless couplings:
//!
//! - zero-point motion `z_zpf = sqrt(hbar / (2 m_eff omega_m))`,
//! - lever arm `gamma_lever = m_eff z_zpf / (hbar omega_m)` (s^2/m), which
//!   converts an acceleration into a dimensionless displacement,
//! - qubit-conditional displacement `k = g0 / omega_m`,
//! - gravitational displacement `Gbar = gamma_lever * g`,
//! - thermal occupation `n_th` of the mechanical bath,
//! - decoherence rates `Gamma_1`, `Gamma_phi`, the mechanically induced
//!   dephasing `Gamma_phi' = Gamma_phi + gamma_m k^2 (2 n_th + 1)`, and the
//!   total coherence decay rate `Gamma_2 = Gamma_1/2 + 2 Gamma_phi'`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{HBAR, K_B};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Raw device operating point in laboratory units.
///
/// Field names mirror the configuration-file keys, including unit suffixes.
/// Unknown keys are rejected on deserialization so a misspelled unit suffix
/// cannot silently fall back to a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceInput {
    /// Mechanical resonance frequency (Hz).
    pub f_m_hz: f64,
    /// Effective motional mass (kg).
    pub m_eff_kg: f64,
    /// Qubit-state-conditional coupling `g0 / 2 pi` (Hz).
    pub g0_over_2pi_hz: f64,
    /// Mechanical quality factor (dimensionless).
    #[serde(rename = "Q_m")]
    pub q_m: f64,
    /// Bath temperature (K). Zero is allowed and gives `n_th = 0`.
    #[serde(rename = "T_bath_k")]
    pub t_bath_k: f64,
    /// Qubit energy relaxation time (s).
    #[serde(rename = "T1_s")]
    pub t1_s: f64,
    /// Qubit pure-dephasing time (s).
    #[serde(rename = "T_phi_s")]
    pub t_phi_s: f64,
    /// Single-shot readout fidelity, in [0.5, 1].
    #[serde(rename = "F_r")]
    pub f_r: f64,
    /// Qubit preparation angle (rad): `cos(theta/2)|0> + sin(theta/2)|1>`.
    #[serde(default = "default_theta")]
    pub theta_rad: f64,
    /// Initial mechanical coherent amplitude, real part.
    #[serde(default)]
    pub alpha_re: f64,
    /// Initial mechanical coherent amplitude, imaginary part.
    #[serde(default)]
    pub alpha_im: f64,
    /// Gravitational acceleration to be estimated (m/s^2).
    #[serde(default = "default_gravity")]
    pub g_m_per_s2: f64,
    /// Dead time per shot: state preparation plus readout (s).
    #[serde(rename = "T_over_s", default)]
    pub t_over_s: f64,
}

fn default_theta() -> f64 {
    std::f64::consts::FRAC_PI_2
}

fn default_gravity() -> f64 {
    9.81
}

impl DeviceInput {
    /// Initial mechanical coherent amplitude as a complex number.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_re, self.alpha_im)
    }

    /// Checks physical admissibility of every field.
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, Requirement); 13] = [
            ("f_m_hz", self.f_m_hz, Requirement::Positive),
            ("m_eff_kg", self.m_eff_kg, Requirement::Positive),
            ("g0_over_2pi_hz", self.g0_over_2pi_hz, Requirement::NonNegative),
            ("Q_m", self.q_m, Requirement::Positive),
            ("T_bath_k", self.t_bath_k, Requirement::NonNegative),
            ("T1_s", self.t1_s, Requirement::Positive),
            ("T_phi_s", self.t_phi_s, Requirement::Positive),
            ("F_r", self.f_r, Requirement::Interval(0.5, 1.0)),
            ("theta_rad", self.theta_rad, Requirement::Interval(0.0, std::f64::consts::PI)),
            ("alpha_re", self.alpha_re, Requirement::Finite),
            ("alpha_im", self.alpha_im, Requirement::Finite),
            ("g_m_per_s2", self.g_m_per_s2, Requirement::NonNegative),
            ("T_over_s", self.t_over_s, Requirement::NonNegative),
        ];
        for (name, value, req) in checks {
            req.check(name, value)?;
        }
        Ok(())
    }
}

/// Admissibility requirement for a single scalar input.
#[derive(Debug, Clone, Copy)]
enum Requirement {
    Positive,
    NonNegative,
    Finite,
    Interval(f64, f64),
}

impl Requirement {
    fn check(self, name: &'static str, value: f64) -> Result<(), ParamError> {
        let ok = match self {
            Requirement::Positive => value.is_finite() && value > 0.0,
            Requirement::NonNegative => value.is_finite() && value >= 0.0,
            Requirement::Finite => value.is_finite(),
            Requirement::Interval(lo, hi) => value.is_finite() && value >= lo && value <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(ParamError::InvalidParameter {
                name,
                requirement: match self {
                    Requirement::Positive => "finite and > 0".into(),
                    Requirement::NonNegative => "finite and >= 0".into(),
                    Requirement::Finite => "finite".into(),
                    Requirement::Interval(lo, hi) => format!("finite and within [{lo}, {hi}]"),
                },
                value,
            })
        }
    }
}

/// Errors produced while validating or deriving device parameters.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be {requirement}, got {value:e}")]
    InvalidParameter {
        name: &'static str,
        requirement: String,
        value: f64,
    },
}

/// Derived operating-point parameters in angular units, plus a copy of the
/// validated input they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Validated input this was derived from.
    pub input: DeviceInput,
    /// Mechanical angular frequency (rad/s).
    pub omega_m: f64,
    /// Mechanical period `2 pi / omega_m` (s).
    pub period_s: f64,
    /// Zero-point motion (m).
    pub z_zpf: f64,
    /// Acceleration-to-displacement lever arm `m_eff z_zpf / (hbar omega_m)`
    /// (s^2/m): multiplying an acceleration gives a dimensionless
    /// displacement in zero-point units.
    pub gamma_lever: f64,
    /// Qubit-conditional dimensionless displacement `g0 / omega_m`.
    pub k: f64,
    /// Gravitational dimensionless displacement `gamma_lever * g`.
    pub g_bar: f64,
    /// Mechanical energy damping rate `omega_m / Q_m` (1/s).
    pub gamma_m: f64,
    /// Thermal occupation of the mechanical bath at `omega_m`.
    pub n_th: f64,
    /// Qubit energy relaxation rate `1 / T1` (1/s).
    pub gamma_1: f64,
    /// Bare qubit pure-dephasing rate `1 / T_phi` (1/s).
    pub gamma_phi: f64,
    /// Pure dephasing including the mechanically induced contribution:
    /// `gamma_phi + gamma_m k^2 (2 n_th + 1)` (1/s).
    pub gamma_phi_prime: f64,
    /// Total qubit coherence decay rate `gamma_1 / 2 + 2 gamma_phi_prime`
    /// (1/s).
    pub gamma_2: f64,
}

impl DerivedParams {
    /// Qubit preparation angle (rad).
    pub fn theta(&self) -> f64 {
        self.input.theta_rad
    }

    /// Initial mechanical coherent amplitude.
    pub fn alpha(&self) -> Complex64 {
        self.input.alpha()
    }

    /// Copy of this operating point with the coherence decay rate forced to
    /// zero (decoherence-free comparison case). The derived rate fields are
    /// zeroed consistently.
    pub fn with_zero_dephasing(mut self) -> Self {
        self.gamma_1 = 0.0;
        self.gamma_phi = 0.0;
        self.gamma_phi_prime = 0.0;
        self.gamma_2 = 0.0;
        self
    }
}

/// Mean thermal occupation of a mode at angular frequency `omega` (rad/s) in
/// contact with a bath at temperature `t_kelvin`.
///
/// Evaluated as `1 / expm1(hbar omega / kB T)`, which stays accurate in the
/// high-temperature limit (where the exponent is tiny) and underflows cleanly
/// to 0 as `T -> 0`.
pub fn thermal_occupation(omega: f64, t_kelvin: f64) -> f64 {
    debug_assert!(omega > 0.0, "thermal_occupation needs omega > 0");
    if t_kelvin <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * t_kelvin);
    1.0 / x.exp_m1()
}

/// Validates `input` and computes the full derived-parameter chain.
///
/// This performs the only Hz → rad/s conversion in the crate.
pub fn derive_params(input: &DeviceInput) -> Result<DerivedParams, ParamError> {
    input.validate()?;

    let omega_m = TWO_PI * input.f_m_hz;
    let g0 = TWO_PI * input.g0_over_2pi_hz;
    let z_zpf = (HBAR / (2.0 * input.m_eff_kg * omega_m)).sqrt();
    let gamma_lever = input.m_eff_kg * z_zpf / (HBAR * omega_m);
    let k = g0 / omega_m;
    let g_bar = gamma_lever * input.g_m_per_s2;
    let gamma_m = omega_m / input.q_m;
    let n_th = thermal_occupation(omega_m, input.t_bath_k);
    let gamma_1 = 1.0 / input.t1_s;
    let gamma_phi = 1.0 / input.t_phi_s;
    let gamma_phi_prime = gamma_phi + gamma_m * k * k * (2.0 * n_th + 1.0);
    let gamma_2 = 0.5 * gamma_1 + 2.0 * gamma_phi_prime;

    Ok(DerivedParams {
        input: *input,
        omega_m,
        period_s: TWO_PI / omega_m,
        z_zpf,
        gamma_lever,
        k,
        g_bar,
        gamma_m,
        n_th,
        gamma_1,
        gamma_phi,
        gamma_phi_prime,
        gamma_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    #[test]
    fn hundred_khz_device_derived_chain() {
        let p = derive_params(&presets::scenario_1()).unwrap();
        assert_relative_eq!(p.omega_m, 6.283185307180e5, max_relative = 1e-11);
        assert_relative_eq!(p.z_zpf, 3.979194920955e-16, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_lever, 3.182841807672e3, max_relative = 1e-11);
        assert_relative_eq!(p.k, 0.2, max_relative = 1e-14);
        assert_relative_eq!(p.g_bar, 3.122367813326e4, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_m, 6.283185307180e-4, max_relative = 1e-11);
        assert_relative_eq!(p.n_th, 4.166823847216e3, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_1, 1250.0, max_relative = 1e-14);
        assert_relative_eq!(p.gamma_phi_prime, 666.8761392104, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_2, 1.958752278421e3, max_relative = 1e-11);
    }

    #[test]
    fn twenty_khz_device_derived_chain() {
        let p = derive_params(&presets::scenario_2()).unwrap();
        assert_relative_eq!(p.omega_m, 1.256637061436e5, max_relative = 1e-11);
        assert_relative_eq!(p.z_zpf, 2.048415958253e-16, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_lever, 1.545724624956e5, max_relative = 1e-11);
        assert_relative_eq!(p.k, 0.2, max_relative = 1e-14);
        assert_relative_eq!(p.g_bar, 1.516355857081e6, max_relative = 1e-11);
        assert_relative_eq!(p.n_th, 2.083611914009e4, max_relative = 1e-11);
        assert_relative_eq!(p.gamma_2, 1.958375227842e3, max_relative = 1e-11);
    }

    #[test]
    fn k_is_frequency_ratio() {
        // The 2 pi factors cancel: k = g0_over_2pi / f_m.
        let mut input = presets::scenario_1();
        input.g0_over_2pi_hz = 1.7e4;
        let p = derive_params(&input).unwrap();
        assert_relative_eq!(p.k, 0.17, max_relative = 1e-14);
    }

    #[test]
    fn doubling_mass_scales_zpf_and_lever_arm() {
        let base = derive_params(&presets::scenario_1()).unwrap();
        let mut heavier = presets::scenario_1();
        heavier.m_eff_kg *= 2.0;
        let p = derive_params(&heavier).unwrap();
        assert_relative_eq!(p.z_zpf, base.z_zpf / 2.0_f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            p.gamma_lever,
            base.gamma_lever * 2.0_f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn thermal_occupation_reference_point_and_limits() {
        let omega = TWO_PI * 1.0e5;
        let n = thermal_occupation(omega, 0.02);
        assert_relative_eq!(n, 4.166823847216e3, max_relative = 1e-11);
        // Monotone increasing in temperature.
        let mut prev = 0.0;
        for t_mk in [1.0, 5.0, 20.0, 100.0, 500.0] {
            let n = thermal_occupation(omega, t_mk * 1e-3);
            assert!(n > prev, "n_th must grow with T ({t_mk} mK)");
            prev = n;
        }
        // Freezes out at T = 0 and at extreme hbar*omega/kB*T.
        assert_eq!(thermal_occupation(omega, 0.0), 0.0);
        assert_eq!(thermal_occupation(1e18, 1e-9), 0.0);
        // High-temperature (equipartition) limit: n_th ~ kB T / hbar omega.
        let n_hot = thermal_occupation(omega, 300.0);
        let equip = K_B * 300.0 / (HBAR * omega) - 0.5;
        assert_relative_eq!(n_hot, equip, max_relative = 1e-6);
    }

    #[test]
    fn rejects_unphysical_inputs() {
        type Mutation = Box<dyn Fn(&mut DeviceInput)>;
        let cases: Vec<(&str, Mutation)> = vec![
            ("f_m_hz", Box::new(|d: &mut DeviceInput| d.f_m_hz = 0.0)),
            ("m_eff_kg", Box::new(|d: &mut DeviceInput| d.m_eff_kg = -1e-9)),
            ("g0_over_2pi_hz", Box::new(|d: &mut DeviceInput| d.g0_over_2pi_hz = -1.0)),
            ("Q_m", Box::new(|d: &mut DeviceInput| d.q_m = 0.0)),
            ("T_bath_k", Box::new(|d: &mut DeviceInput| d.t_bath_k = -0.01)),
            ("T1_s", Box::new(|d: &mut DeviceInput| d.t1_s = 0.0)),
            ("T_phi_s", Box::new(|d: &mut DeviceInput| d.t_phi_s = f64::NAN)),
            ("F_r", Box::new(|d: &mut DeviceInput| d.f_r = 0.4)),
            ("F_r", Box::new(|d: &mut DeviceInput| d.f_r = 1.2)),
            ("theta_rad", Box::new(|d: &mut DeviceInput| d.theta_rad = -0.1)),
            ("alpha_re", Box::new(|d: &mut DeviceInput| d.alpha_re = f64::INFINITY)),
            ("T_over_s", Box::new(|d: &mut DeviceInput| d.t_over_s = -1e-6)),
        ];
        for (field, mutate) in cases {
            let mut input = presets::scenario_1();
            mutate(&mut input);
            match derive_params(&input) {
                Err(ParamError::InvalidParameter { name, .. }) => {
                    assert_eq!(name, field, "wrong field reported");
                }
                Ok(_) => panic!("expected rejection for field {field}"),
            }
        }
    }

    #[test]
    fn k_zero_is_a_valid_operating_point() {
        let mut input = presets::scenario_1();
        input.g0_over_2pi_hz = 0.0;
        let p = derive_params(&input).unwrap();
        assert_eq!(p.k, 0.0);
        // No mechanically induced dephasing without coupling.
        assert_relative_eq!(p.gamma_phi_prime, p.gamma_phi, max_relative = 1e-15);
    }

    #[test]
    fn zero_dephasing_copy_only_clears_rates() {
        let p = derive_params(&presets::scenario_1()).unwrap();
        let ideal = p.with_zero_dephasing();
        assert_eq!(ideal.gamma_2, 0.0);
        assert_eq!(ideal.gamma_1, 0.0);
        assert_eq!(ideal.k, p.k);
        assert_eq!(ideal.g_bar, p.g_bar);
    }

    #[test]
    fn lever_arm_identity_holds() {
        for input in [presets::scenario_1(), presets::scenario_2()] {
            let p = derive_params(&input).unwrap();
            let direct = input.m_eff_kg * p.z_zpf / (HBAR * p.omega_m);
            assert_relative_eq!(p.gamma_lever, direct, max_relative = 1e-15);
            // Equivalent closed form: gamma = sqrt(m / (2 hbar omega^3)).
            let closed = (input.m_eff_kg / (2.0 * HBAR * p.omega_m.powi(3))).sqrt();
            assert_relative_eq!(p.gamma_lever, closed, max_relative = 1e-12);
        }
    }
}
