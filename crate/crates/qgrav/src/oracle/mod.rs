//! Independent numerical oracle on a truncated Fock space.
//!
//! Everything in this module validates the analytic machinery from first
//! principles: exact branch propagation by eigendecomposition
//! ([`pure::BranchPropagator`]), finite-difference QFI estimators with two
//! independent routes ([`pure::qfi_pure_fd`]), a fixed-step density-matrix
//! integrator for the full dissipative model ([`lindblad`]), and generic
//! Bloch-vector Fisher-information formulas for the reduced qubit state
//! ([`bloch`]). None of it reuses the closed-form expressions it is meant to
//! check.
//!
//! Resource safety contract: any computation that would need a larger Fock
//! space than configured fails loudly with
//! [`OracleError::TruncationLeakage`] rather than returning silently
//! truncated numbers.

pub mod bloch;
pub mod fock;
pub mod lindblad;
pub mod pure;

pub use bloch::{cfi_readout_grid, qfi_mixed_bloch, CfiGridMax};
pub use fock::{
    coherent_amplitudes, default_n_max, n_max_thermal, n_max_with_gravity, thermal_weights,
    FockState,
};
pub use lindblad::{lindblad_evolve, JointDensity, LindbladOptions, LindbladRates, MechInit};
pub use pure::{evolve_pure, qfi_pure_fd, BranchPropagator, QfiFdEstimate};

use thiserror::Error;

/// Failure modes of the numerical oracle.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    /// The top retained Fock level acquired non-negligible occupancy; the
    /// truncated space is too small for the requested dynamics.
    #[error(
        "Fock truncation leaked: top-level occupancy {leakage:.3e} at tau = {tau:.4} \
         exceeds {tol:.1e} with n_max = {n_max}; increase n_max"
    )]
    TruncationLeakage {
        n_max: usize,
        tau: f64,
        leakage: f64,
        tol: f64,
    },
    /// Step halving hit its limit without satisfying the trace/positivity
    /// monitors.
    #[error(
        "integrator exceeded {steps} steps per period without passing \
         trace/positivity monitors (worst defect {defect:.3e})"
    )]
    StepLimitExceeded { steps: usize, defect: f64 },
    /// `|r| -> 1` with a nonzero radial derivative: the mixed-state Bloch QFI
    /// formula has a genuine pole and no finite answer exists.
    #[error(
        "Bloch-vector QFI is singular: |r| = {r_norm} with radial slope {radial_slope:.3e}"
    )]
    SingularBlochQfi { r_norm: f64, radial_slope: f64 },
}

/// Knobs for the oracle computations. `None` fields fall back to documented
/// defaults derived from the operating point.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Mechanical truncation override; default picks
    /// [`fock::n_max_with_gravity`] (pure runs) or [`fock::n_max_thermal`]
    /// (thermal runs).
    pub n_max: Option<usize>,
    /// Maximum tolerated top-level occupancy.
    pub leakage_tol: f64,
    /// Finite-difference gravity step override (m/s^2); default keeps the
    /// largest phase response near 1e-3 rad.
    pub delta_g: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_max: None,
            leakage_tol: 1e-8,
            delta_g: None,
        }
    }
}
