//! Computation engine for a gravimeter built from a flux-coupled transmon
//! qubit longitudinally coupled to a nanomechanical oscillator.
//!
//! The qubit state conditions the equilibrium displacement of the oscillator;
//! a uniform gravitational acceleration `g` shifts both conditional
//! displacements through the mechanical lever arm. Interferometry on the qubit
//! at mechanical revival times then reads out `g`. This crate provides:
//!
//! - [`params`]: device inputs, validation, and the derived-parameter chain
//!   (zero-point motion, lever arm, dimensionless couplings, thermal
//!   occupation, decoherence rates).
//! - [`tau`]: a cycle-aware phase type that keeps mechanical revival times
//!   exact under range reduction.
//! - [`closed_system`]: conditional coherent-state branches, exact phases,
//!   the closed-form quantum Fisher information, branch overlap, and the
//!   qubit-oscillator entanglement witness (linear entropy).
//! - [`open_system`]: analytic reduced qubit state under dephasing and
//!   relaxation, visibility, decohered quantum Fisher information, Ramsey
//!   classical Fisher information, alternative which-path dephasing models,
//!   and per-root-Hz sensitivity.
//! - [`oracle`]: an independent truncated-Fock-space numerical oracle (exact
//!   branch propagation by eigendecomposition, finite-difference QFI
//!   estimators, a joint-space Lindblad integrator, and Bloch-vector QFI/CFI
//!   for the reduced qubit) used to cross-validate every analytic claim.
//! - [`scenario`]: end-to-end evaluation of device operating points — optimal
//!   interrogation time over the revival comb, metrology time series,
//!   integrated resolution, and parameter sweeps.
//! - [`validation`]: the named cross-check suite wiring analytics against the
//!   oracle, exposed to the CLI `validate` subcommand and the acceptance
//!   tests.
//!
//! Conventions used throughout: the qubit basis is `{|0>, |1>}` with
//! `sigma_z|0> = +|0>`; dimensionless time is `tau = omega_m t`; the
//! conditional displacement is `Z_j = (-1)^j k + Gbar` for branch `j`; the
//! bare qubit precession `Omega_q` is carried symbolically (as a coefficient
//! of an unevaluated constant) and never enters any observable computed here.

pub mod closed_system;
pub mod constants;
pub mod open_system;
pub mod oracle;
pub mod params;
pub mod presets;
pub mod scenario;
pub mod tau;
pub mod validation;

pub use open_system::DephasingModel;
pub use params::{derive_params, DerivedParams, DeviceInput, ParamError};
pub use tau::Tau;
