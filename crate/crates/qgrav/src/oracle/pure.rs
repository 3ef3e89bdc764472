//! Exact pure-state propagation and finite-difference QFI estimators.
//!
//! Each qubit branch `j` sees the real symmetric tridiagonal mechanical
//! Hamiltonian `H_j / omega_m = n_hat + Z_j (a + a^dag)` with
//! `Z_j = (-1)^j k + Gbar`. One eigendecomposition per branch gives the exact
//! propagator `U_j(tau) = V e^{-i Lambda tau} V^T`, so evolution carries no
//! step error — the only approximation is the Fock truncation, which is
//! monitored through the top-level occupancy.
//!
//! Everything here is deliberately independent of the analytic route: no
//! displaced-frame algebra, no closed-form phases — just linear algebra on
//! the truncated space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::params::DerivedParams;

use super::fock::{coherent_amplitudes, mech_annihilation_expectation, FockState};
use super::{OracleConfig, OracleError};

/// Exact propagator for one qubit branch on the truncated mechanical space.
pub struct BranchPropagator {
    eigenvalues: Vec<f64>,
    /// Orthogonal eigenvector matrix, columns are eigenvectors.
    eigenvectors: DMatrix<f64>,
}

impl BranchPropagator {
    /// Diagonalizes `n_hat + z (a + a^dag)` on levels `0..=n_max`.
    pub fn new(n_max: usize, z: f64) -> Self {
        let m = n_max + 1;
        let h = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                i as f64
            } else if i + 1 == j || j + 1 == i {
                z * (i.min(j) as f64 + 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(h);
        BranchPropagator {
            eigenvalues: eig.eigenvalues.as_slice().to_vec(),
            eigenvectors: eig.eigenvectors,
        }
    }

    /// Applies `e^{-i H tau}` to a mechanical amplitude block.
    pub fn evolve(&self, block: &[Complex64], tau: f64) -> Vec<Complex64> {
        let m = self.eigenvalues.len();
        assert_eq!(block.len(), m, "block does not match truncation");
        let v = &self.eigenvectors;
        // w = V^T block
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        for (col, w_col) in w.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (row, b) in block.iter().enumerate() {
                acc += b * v[(row, col)];
            }
            *w_col = acc;
        }
        // Phase in the eigenbasis, then back: out = V (e^{-i lambda tau} w).
        for (wc, &lambda) in w.iter_mut().zip(&self.eigenvalues) {
            *wc *= Complex64::from_polar(1.0, -lambda * tau);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (col, wc) in w.iter().enumerate() {
            for (row, o) in out.iter_mut().enumerate() {
                *o += wc * v[(row, col)];
            }
        }
        out
    }
}

/// Evolves a joint pure state for dimensionless time `tau`, branch by branch,
/// and enforces the truncation-leakage monitor on the result.
pub fn evolve_pure(
    state: &FockState,
    tau: f64,
    p: &DerivedParams,
    leakage_tol: f64,
) -> Result<FockState, OracleError> {
    let branch_z = [p.k + p.g_bar, -p.k + p.g_bar];
    let m = state.n_max + 1;
    let mut amps = Vec::with_capacity(2 * m);
    for (q, &z) in branch_z.iter().enumerate() {
        let prop = BranchPropagator::new(state.n_max, z);
        amps.extend(prop.evolve(state.qubit_block(q), tau));
    }
    let out = FockState {
        n_max: state.n_max,
        amps,
    };
    let leakage = out.top_level_occupancy();
    if leakage >= leakage_tol {
        return Err(OracleError::TruncationLeakage {
            n_max: state.n_max,
            tau,
            leakage,
            tol: leakage_tol,
        });
    }
    Ok(out)
}

/// Mechanical expectation `<a>` of one evolved branch; used to cross-check
/// the analytic branch trajectory.
pub fn branch_annihilation_expectation(
    alpha: Complex64,
    z: f64,
    tau: f64,
    n_max: usize,
) -> Complex64 {
    let prop = BranchPropagator::new(n_max, z);
    let evolved = prop.evolve(&coherent_amplitudes(alpha, n_max), tau);
    mech_annihilation_expectation(&evolved)
}

/// Two-route finite-difference QFI estimate with Richardson extrapolation.
#[derive(Debug, Clone, Copy)]
pub struct QfiFdEstimate {
    /// Richardson-extrapolated derivative-route value
    /// `4 (<d psi|d psi> - |<psi|d psi>|^2)`; the primary estimate.
    pub value: f64,
    /// Derivative route at steps `delta` and `delta/2`.
    pub derivative_route: [f64; 2],
    /// Fidelity route `2 (1 - |<psi(g-d)|psi(g+d)>|) / d^2` at `delta` and
    /// `delta/2`, Richardson-extrapolated into `fidelity_value`.
    pub fidelity_route: [f64; 2],
    /// Richardson-extrapolated fidelity-route value.
    pub fidelity_value: f64,
    /// Relative disagreement between the two extrapolated routes.
    pub route_disagreement: f64,
    /// Set when the routes disagree by more than 1e-3 relative; the estimate
    /// should not be trusted at face value.
    pub warn_routes_disagree: bool,
    /// Finite-difference step actually used (m/s^2).
    pub delta_g: f64,
    /// Truncation used.
    pub n_max: usize,
}

/// Chooses a gravity step so the largest branch-phase response
/// `|delta_Gbar * d(phase)/d(Gbar)|` stays near 1e-3 rad, keeping the
/// finite-difference truncation error ~1e-6 before extrapolation.
fn choose_delta_g(p: &DerivedParams, tau: f64) -> f64 {
    let slope = 4.0 * (p.k + p.g_bar.abs()) * (tau + 2.0) + 2.0 * p.alpha().norm() + 1.0;
    1e-3 / slope / p.gamma_lever
}

/// Weighted inner product over the two branches of the hybrid state:
/// `p0 <b0(a)|b0(b)> + p1 <b1(a)|b1(b)>`.
fn hybrid_inner(
    p0: f64,
    p1: f64,
    a: &[Vec<Complex64>; 2],
    b: &[Vec<Complex64>; 2],
) -> Complex64 {
    let block = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(u, v)| u.conj() * v).sum()
    };
    block(&a[0], &b[0]) * p0 + block(&a[1], &b[1]) * p1
}

/// Estimates the QFI for gravity of the hybrid state at dimensionless time
/// `tau` by finite differences in `g`, entirely on the truncated Fock space.
///
/// Two independent routes are computed — the derivative form
/// `4(<d psi|d psi> - |<psi|d psi>|^2)` and the fidelity form
/// `2 (1 - |<psi(g-d)|psi(g+d)>|)/d^2` — each at steps `delta` and
/// `delta/2` with Richardson extrapolation. A relative disagreement above
/// 1e-3 sets the warning flag.
pub fn qfi_pure_fd(
    p: &DerivedParams,
    tau: f64,
    cfg: &OracleConfig,
) -> Result<QfiFdEstimate, OracleError> {
    let alpha = p.alpha();
    let n_max = cfg
        .n_max
        .unwrap_or_else(|| super::fock::n_max_with_gravity(alpha, p.k, p.g_bar));
    let delta_g = cfg.delta_g.unwrap_or_else(|| choose_delta_g(p, tau));
    let theta = p.theta();
    let (p0, p1) = ((0.5 * theta).cos().powi(2), (0.5 * theta).sin().powi(2));

    // Branch states at the five gravity values g + s*delta, s in
    // {-1, -1/2, 0, +1/2, +1}.
    let init = coherent_amplitudes(alpha, n_max);
    let top0 = init[n_max].norm_sqr();
    if top0 >= cfg.leakage_tol {
        return Err(OracleError::TruncationLeakage {
            n_max,
            tau: 0.0,
            leakage: top0,
            tol: cfg.leakage_tol,
        });
    }
    let shifts = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut states: Vec<[Vec<Complex64>; 2]> = Vec::with_capacity(shifts.len());
    for &s in &shifts {
        let g_bar = p.gamma_lever * (p.input.g_m_per_s2 + s * delta_g);
        let mut branches: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
        for (j, branch) in branches.iter_mut().enumerate() {
            let z = if j == 0 { p.k + g_bar } else { -p.k + g_bar };
            let evolved = BranchPropagator::new(n_max, z).evolve(&init, tau);
            let leakage = evolved[n_max].norm_sqr();
            if leakage >= cfg.leakage_tol {
                return Err(OracleError::TruncationLeakage {
                    n_max,
                    tau,
                    leakage,
                    tol: cfg.leakage_tol,
                });
            }
            *branch = evolved;
        }
        states.push(branches);
    }
    let [minus, half_minus, center, half_plus, plus] = [
        &states[0], &states[1], &states[2], &states[3], &states[4],
    ];

    let derivative_route = |lo: &[Vec<Complex64>; 2], hi: &[Vec<Complex64>; 2], d: f64| -> f64 {
        let m = n_max + 1;
        let mut dpsi: [Vec<Complex64>; 2] = [vec![Complex64::default(); m], vec![Complex64::default(); m]];
        for j in 0..2 {
            for n in 0..m {
                dpsi[j][n] = (hi[j][n] - lo[j][n]) / (2.0 * d);
            }
        }
        let dd = hybrid_inner(p0, p1, &dpsi, &dpsi).re;
        let pd = hybrid_inner(p0, p1, center, &dpsi);
        4.0 * (dd - pd.norm_sqr())
    };
    let fidelity_route = |lo: &[Vec<Complex64>; 2], hi: &[Vec<Complex64>; 2], d: f64| -> f64 {
        2.0 * (1.0 - hybrid_inner(p0, p1, lo, hi).norm()) / (d * d)
    };

    let d1 = derivative_route(minus, plus, delta_g);
    let d2 = derivative_route(half_minus, half_plus, 0.5 * delta_g);
    let f1 = fidelity_route(minus, plus, delta_g);
    let f2 = fidelity_route(half_minus, half_plus, 0.5 * delta_g);
    let value = (4.0 * d2 - d1) / 3.0;
    let fidelity_value = (4.0 * f2 - f1) / 3.0;
    let scale = value.abs().max(fidelity_value.abs()).max(f64::MIN_POSITIVE);
    let route_disagreement = (value - fidelity_value).abs() / scale;
    Ok(QfiFdEstimate {
        value,
        derivative_route: [d1, d2],
        fidelity_route: [f1, f2],
        fidelity_value,
        route_disagreement,
        warn_routes_disagree: route_disagreement > 1e-3,
        delta_g,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_system::{qfi_closed_form, HybridPureState};
    use crate::tau::Tau;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Synthetic operating point with prescribed dimensionless couplings.
    fn test_point(k: f64, g_bar: f64) -> DerivedParams {
        crate::closed_system::tests_support::test_point(k, g_bar)
    }

    #[test]
    fn free_oscillator_rotates_coherent_states() {
        let alpha = Complex64::new(1.1, -0.4);
        let n_max = 60;
        let prop = BranchPropagator::new(n_max, 0.0);
        for tau in [0.7, 2.9] {
            let evolved = prop.evolve(&coherent_amplitudes(alpha, n_max), tau);
            let expected = coherent_amplitudes(alpha * Complex64::from_polar(1.0, -tau), n_max);
            for (a, b) in evolved.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn displaced_ground_state_is_stationary_with_binding_energy() {
        // b = a + z diagonalizes H = n + z(a + a^dag) = b^dag b - z^2, so the
        // coherent state |-z> is the exact ground state at energy -z^2.
        let z = 0.45;
        let n_max = 50;
        let alpha = Complex64::new(-z, 0.0);
        let tau = 1.9;
        let prop = BranchPropagator::new(n_max, z);
        let evolved = prop.evolve(&coherent_amplitudes(alpha, n_max), tau);
        let expected_phase = Complex64::from_polar(1.0, z * z * tau);
        for (a, b) in evolved.iter().zip(&coherent_amplitudes(alpha, n_max)) {
            assert!((a - b * expected_phase).norm() < 1e-9);
        }
    }

    #[test]
    fn branch_trajectory_matches_analytic_displaced_orbit() {
        let p = test_point(0.2, 0.5);
        let alpha = Complex64::new(0.6, -0.2);
        let tau = Tau::from_radians(2.0);
        let state = HybridPureState::new(p.theta(), alpha, tau, &p);
        for (j, branch) in state.branch.iter().enumerate() {
            let a_num = branch_annihilation_expectation(alpha, branch.z, 2.0, 80);
            assert!(
                (a_num - branch.alpha_tau).norm() < 1e-9,
                "branch {j}: numeric <a> = {a_num}, analytic {}",
                branch.alpha_tau
            );
        }
    }

    #[test]
    fn revival_phase_matches_analytic_branch_phase() {
        // At tau = 2 pi n the branch returns to its initial coherent state up
        // to the phase exp(i phi_j); the overlap reads it out directly.
        let p = test_point(0.2, 0.7);
        let alpha = Complex64::new(0.4, 0.3);
        let tau = Tau::from_cycles(1);
        let state = HybridPureState::new(p.theta(), alpha, tau, &p);
        let n_max = 90;
        let init = coherent_amplitudes(alpha, n_max);
        for branch in &state.branch {
            let evolved = BranchPropagator::new(n_max, branch.z).evolve(&init, 2.0 * PI);
            let overlap: Complex64 = init.iter().zip(&evolved).map(|(a, b)| a.conj() * b).sum();
            let expected = Complex64::from_polar(1.0, branch.phase);
            assert!(
                (overlap - expected).norm() < 1e-8,
                "phase mismatch: overlap {overlap}, analytic {expected}"
            );
        }
    }

    #[test]
    fn joint_evolution_preserves_norm_and_flags_leakage() {
        let p = test_point(0.2, 0.5);
        let state =
            FockState::from_qubit_and_coherent(1.0, Complex64::new(0.3, 0.1), 60, 1e-8).unwrap();
        let evolved = evolve_pure(&state, 2.6, &p, 1e-8).unwrap();
        assert_relative_eq!(evolved.norm_sqr(), 1.0, max_relative = 1e-11);
        // A truncation far too small for the displaced orbit must be caught.
        let cramped =
            FockState::from_qubit_and_coherent(1.0, Complex64::new(0.3, 0.1), 5, 1.0).unwrap();
        match evolve_pure(&cramped, 2.6, &p, 1e-8) {
            Err(OracleError::TruncationLeakage { n_max: 5, .. }) => {}
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn fd_qfi_agrees_with_closed_form_at_generic_point() {
        let p = test_point(0.2, 0.5);
        let cfg = OracleConfig::default();
        for tau in [1.3, 2.0 * PI] {
            let est = qfi_pure_fd(&p, tau, &cfg).unwrap();
            let exact = qfi_closed_form(p.theta(), p.alpha(), Tau::from_radians(tau), &p);
            assert_relative_eq!(est.value, exact, max_relative = 1e-6);
            assert!(!est.warn_routes_disagree, "routes disagree: {est:?}");
        }
    }

    #[test]
    fn fd_routes_cross_check_each_other() {
        let mut input = test_point(0.15, 0.9).input;
        input.alpha_re = 0.5;
        input.alpha_im = -0.3;
        input.theta_rad = 1.0;
        let p = crate::params::derive_params(&input).unwrap();
        let est = qfi_pure_fd(&p, 4.4, &OracleConfig::default()).unwrap();
        assert!(est.route_disagreement < 1e-5, "{est:?}");
        // Richardson must beat the raw step-delta estimates.
        let exact = qfi_closed_form(p.theta(), p.alpha(), Tau::from_radians(4.4), &p);
        let raw_err = (est.derivative_route[0] - exact).abs();
        let extrap_err = (est.value - exact).abs();
        assert!(extrap_err <= raw_err);
    }
}
