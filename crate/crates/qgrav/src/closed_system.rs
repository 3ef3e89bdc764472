//! Closed (decoherence-free) conditional dynamics and quantum Fisher
//! information.
//!
//! With the qubit prepared in `cos(theta/2)|0> + sin(theta/2)|1>` and the
//! oscillator in a coherent state `|alpha>`, the longitudinal coupling splits
//! the joint state into two coherent branches labeled by the qubit:
//!
//! - conditional displacement `Z_j = (-1)^j k + Gbar`,
//! - amplitude `alpha_j(tau) = alpha e^{-i tau} - Z_j eta`, with
//!   `eta = 1 - e^{-i tau}`,
//! - oscillator phase `phi_j = Z_j^2 (tau - sin tau) - Z_j Im(alpha eta)`,
//! - bare qubit precession `-(-1)^j Omega_q t / 2`, carried symbolically
//!   (see [`ConditionalBranch::omega_q_coeff`]) and removed by the rotating
//!   frame; it never enters an observable.
//!
//! The quantum Fisher information for estimating `g` follows exactly from the
//! branch structure:
//!
//! `F_Q(g) = 4 gamma_lever^2 [ |eta|^2 + 16 k^2 p0 p1 (tau - sin tau)^2 ]`
//!
//! which is independent of `alpha` and of `Gbar`: every `alpha`-dependent
//! term in the branch derivatives is branch-independent and cancels in the
//! weighted variance. [`qfi_intermediates`] keeps the generic
//! moment-by-moment route alive as an internal cross-check of that
//! cancellation.

use num_complex::Complex64;

use crate::params::DerivedParams;
use crate::tau::Tau;

use std::f64::consts::PI;

/// One qubit-conditioned coherent branch of the joint state at time `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalBranch {
    /// Qubit eigenvalue sign for this branch: +1 for `|0>`, -1 for `|1>`.
    pub qubit_sign: i8,
    /// Conditional dimensionless displacement `Z_j = qubit_sign * k + Gbar`.
    pub z: f64,
    /// Coherent amplitude `alpha_j(tau)` in the lab frame.
    pub alpha_tau: Complex64,
    /// Oscillator phase `Z_j^2 (tau - sin tau) - Z_j Im(alpha eta)` (rad).
    pub phase: f64,
    /// Coefficient of the *symbolic* bare qubit splitting: the branch also
    /// carries a phase `omega_q_coeff * (Omega_q / omega_m)`, with
    /// `omega_q_coeff = -qubit_sign * tau / 2`. `Omega_q` is never given a
    /// numeric value; interferometry is referenced to the qubit rotating
    /// frame, where this term cancels, so it is deliberately kept out of
    /// [`ConditionalBranch::phase`].
    pub omega_q_coeff: f64,
}

impl ConditionalBranch {
    fn new(qubit_sign: i8, k: f64, g_bar: f64, alpha: Complex64, tau: Tau) -> Self {
        let z = f64::from(qubit_sign) * k + g_bar;
        let eta = tau.eta();
        let e_m_i_tau = Complex64::new(tau.cos(), -tau.sin());
        let alpha_tau = alpha * e_m_i_tau - z * eta;
        let phase = z * z * tau.minus_sin() - z * (alpha * eta).im;
        ConditionalBranch {
            qubit_sign,
            z,
            alpha_tau,
            phase,
            omega_q_coeff: -f64::from(qubit_sign) * 0.5 * tau.radians(),
        }
    }
}

/// Joint qubit-oscillator pure state at time `tau`, in branch form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridPureState {
    /// Population of the `|0>` branch, `cos^2(theta/2)`.
    pub p0: f64,
    /// Population of the `|1>` branch, `sin^2(theta/2)`.
    pub p1: f64,
    /// Branch data, index 0 for `|0>` and 1 for `|1>`.
    pub branch: [ConditionalBranch; 2],
    /// Branch displacement gap `Z_0 - Z_1 = 2k`, stored exactly from `k`
    /// rather than re-derived by subtraction (which would lose precision for
    /// `Gbar >> k`).
    gap: f64,
    /// `eta(tau)` at the evaluation time.
    eta: Complex64,
    /// Initial coherent amplitude.
    alpha0: Complex64,
    tau: Tau,
}

impl HybridPureState {
    /// Builds the branch decomposition from an operating point.
    pub fn new(theta: f64, alpha: Complex64, tau: Tau, p: &DerivedParams) -> Self {
        Self::from_couplings(theta, alpha, tau, p.k, p.g_bar)
    }

    /// Builds directly from the dimensionless couplings (used by the oracle
    /// tests, which construct synthetic operating points).
    pub fn from_couplings(theta: f64, alpha: Complex64, tau: Tau, k: f64, g_bar: f64) -> Self {
        let half = 0.5 * theta;
        let (p0, p1) = (half.cos() * half.cos(), half.sin() * half.sin());
        HybridPureState {
            p0,
            p1,
            branch: [
                ConditionalBranch::new(1, k, g_bar, alpha, tau),
                ConditionalBranch::new(-1, k, g_bar, alpha, tau),
            ],
            gap: 2.0 * k,
            eta: tau.eta(),
            alpha0: alpha,
            tau,
        }
    }

    /// Evaluation time.
    pub fn tau(&self) -> Tau {
        self.tau
    }

    /// `|alpha_0 - alpha_1|^2 = (2k)^2 |eta|^2`: squared separation of the
    /// branch amplitudes in phase space. Exactly 0 at revivals.
    pub fn branch_separation_sq(&self) -> f64 {
        self.gap * self.gap * self.eta.norm_sqr()
    }

    /// Oscillator overlap `<alpha_1 | alpha_0>` including its phase.
    pub fn branch_overlap(&self) -> Complex64 {
        let cross = self.branch[1].alpha_tau.conj() * self.branch[0].alpha_tau;
        Complex64::from_polar((-0.5 * self.branch_separation_sq()).exp(), cross.im)
    }

    /// Reduced qubit coherence `rho_01 = <0|rho_q|1>` in the qubit rotating
    /// frame (the symbolic `Omega_q` precession is dropped):
    /// `(1/2) sin(theta) e^{i(phi_0 - phi_1)} <alpha_1|alpha_0>`.
    ///
    /// The relative phase `phi_0 - phi_1 = 4 k Gbar (tau - sin tau)
    /// - 2 k Im(alpha eta)` is computed from `k` and `Gbar` directly to avoid
    /// the cancellation in `Z_0^2 - Z_1^2`.
    pub fn qubit_coherence(&self) -> Complex64 {
        let z_sum = self.branch[0].z + self.branch[1].z; // 2 Gbar
        let rel_phase = self.gap * (z_sum * self.tau.minus_sin() - (self.alpha0 * self.eta).im);
        let amp = (self.p0 * self.p1).sqrt(); // (1/2) sin(theta) for theta in [0, pi]
        let overlap = self.branch_overlap();
        Complex64::from_polar(amp * overlap.norm(), rel_phase + overlap.arg())
    }

    /// Linear entropy of the reduced qubit,
    /// `S_L = 2 p0 p1 (1 - e^{-|alpha_0 - alpha_1|^2})`: the
    /// qubit-oscillator entanglement witness. Exactly 0 at revivals, bounded
    /// by `2 p0 p1 <= 1/2`.
    pub fn linear_entropy(&self) -> f64 {
        2.0 * self.p0 * self.p1 * (-(-self.branch_separation_sq()).exp_m1())
    }
}

/// Exact closed-form quantum Fisher information for estimating `g` (units
/// 1/(m/s^2)^2, i.e. s^4/m^2) from the pure conditional state at `tau`.
///
/// `F_Q = 4 gamma_lever^2 [ |eta|^2 + 16 k^2 p0 p1 (tau - sin tau)^2 ]`.
///
/// The result does not depend on `alpha` (or on `Gbar`): the
/// `alpha`-dependent pieces of the branch derivatives are common to both
/// branches and cancel in the variance. The argument is kept so call sites
/// document the full state; independence is enforced by tests against
/// [`qfi_intermediates`] and the numerical oracle.
pub fn qfi_closed_form(theta: f64, alpha: Complex64, tau: Tau, p: &DerivedParams) -> f64 {
    debug_assert!(alpha.re.is_finite() && alpha.im.is_finite());
    let half = 0.5 * theta;
    let p0p1 = (half.cos() * half.sin()).powi(2);
    let clock = tau.minus_sin();
    let gamma2 = p.gamma_lever * p.gamma_lever;
    4.0 * gamma2 * (tau.eta_norm_sqr() + 16.0 * p.k * p.k * p0p1 * clock * clock)
}

/// Quantum Fisher information at the `n`-th mechanical revival
/// (`tau = 2 pi n`): `F_Q = 256 pi^2 gamma_lever^2 k^2 p0 p1 n^2`.
pub fn qfi_revival(n: u32, theta: f64, p: &DerivedParams) -> f64 {
    let half = 0.5 * theta;
    let p0p1 = (half.cos() * half.sin()).powi(2);
    let n = f64::from(n);
    256.0 * PI * PI * (p.gamma_lever * p.k).powi(2) * p0p1 * n * n
}

/// Per-branch ingredients of the generic pure-state Fisher-information
/// formula `F = 4 [ <dPsi|dPsi> - |<Psi|dPsi>|^2 ]`, kept as an independent
/// cross-check route against [`qfi_closed_form`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiIntermediates {
    /// `eta = 1 - e^{-i tau}`; the amplitude derivative is
    /// `d alpha_j / d Gbar = -eta` for both branches.
    pub eta: Complex64,
    /// Branch weights `[p0, p1]`.
    pub weight: [f64; 2],
    /// Total phase-derivative `A_j = d phi_j/d Gbar + Im(conj(alpha_j)
    /// d alpha_j/d Gbar)`; only its branch *difference* survives in `F`.
    pub a: [f64; 2],
    /// `R_j = Re(conj(alpha_j) d alpha_j / d Gbar)`.
    pub r: [f64; 2],
    /// `I_j = Im(conj(alpha_j) d alpha_j / d Gbar)`.
    pub i: [f64; 2],
    gamma_lever: f64,
}

/// Computes the generic-route ingredients at an operating point.
pub fn qfi_intermediates(theta: f64, alpha: Complex64, tau: Tau, p: &DerivedParams) -> QfiIntermediates {
    let state = HybridPureState::new(theta, alpha, tau, p);
    let eta = tau.eta();
    let d_alpha = -eta;
    let clock = tau.minus_sin();
    let mut a = [0.0; 2];
    let mut r = [0.0; 2];
    let mut i = [0.0; 2];
    for j in 0..2 {
        let cross = state.branch[j].alpha_tau.conj() * d_alpha;
        r[j] = cross.re;
        i[j] = cross.im;
        // d phi_j / d Gbar = 2 Z_j (tau - sin tau) - Im(alpha eta).
        let d_phase = 2.0 * state.branch[j].z * clock - (alpha * eta).im;
        a[j] = d_phase + i[j];
    }
    QfiIntermediates {
        eta,
        weight: [state.p0, state.p1],
        a,
        r,
        i,
        gamma_lever: p.gamma_lever,
    }
}

impl QfiIntermediates {
    /// Assembles the Fisher information from the raw moments:
    /// `F_Gbar = 4 [ |eta|^2 + sum_j p_j A_j^2 - (sum_j p_j A_j)^2 ]`,
    /// then converts to `g` units with `gamma_lever^2`.
    ///
    /// This route is exact but suffers cancellation when `|A_j|` is huge
    /// (physical `Gbar ~ 1e4`); it is meant for cross-validation at moderate
    /// couplings, where it must agree with [`qfi_closed_form`].
    pub fn qfi(&self) -> f64 {
        let mean: f64 = self.weight[0] * self.a[0] + self.weight[1] * self.a[1];
        let second: f64 = self.weight[0] * self.a[0] * self.a[0] + self.weight[1] * self.a[1] * self.a[1];
        let var = second - mean * mean;
        4.0 * self.gamma_lever * self.gamma_lever * (self.eta.norm_sqr() + var)
    }
}

/// Test-only helpers shared across this crate's test modules.
#[cfg(test)]
pub(crate) mod tests_support {
    use crate::params::{derive_params, DerivedParams, DeviceInput};

    /// Synthetic operating point with the requested dimensionless couplings,
    /// driven through the normal validation pipeline.
    pub(crate) fn test_point(k: f64, g_bar: f64) -> DerivedParams {
        let f_m = 1.0e5;
        let mut input = DeviceInput {
            f_m_hz: f_m,
            m_eff_kg: 5.3e-10,
            g0_over_2pi_hz: k * f_m,
            q_m: 1.0e9,
            t_bath_k: 0.02,
            t1_s: 0.8e-3,
            t_phi_s: 1.5e-3,
            f_r: 0.995,
            theta_rad: std::f64::consts::FRAC_PI_2,
            alpha_re: 0.0,
            alpha_im: 0.0,
            g_m_per_s2: 0.0,
            t_over_s: 0.0,
        };
        let lever = derive_params(&input).unwrap().gamma_lever;
        input.g_m_per_s2 = g_bar / lever;
        derive_params(&input).unwrap()
    }
}
