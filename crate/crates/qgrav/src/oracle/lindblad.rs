//! Fixed-step density-matrix integration of the full dissipative model.
//!
//! The master equation is integrated in dimensionless time `tau = omega_m t`
//! with all rates scaled by `omega_m`. Collapse channels:
//!
//! - qubit relaxation at `Gamma_1` (the prepared component `|1>` decays into
//!   `|0>`; the `sigma_z` sign convention fixes which branch is displaced by
//!   `+k` and is independent of the energy ordering),
//! - bare qubit dephasing `sigma_z` at `Gamma_phi` (the mechanically induced
//!   part must *emerge* from the dynamics, so only the bare rate enters),
//! - mechanical damping `a` at `gamma_m (n_th + 1)` and heating `a^dag` at
//!   `gamma_m n_th`.
//!
//! Because every channel is block-diagonal in the qubit, the joint density
//! matrix is stored as three mechanical blocks (`rho00`, `rho01`, `rho11`)
//! and the right-hand side costs O(n_max^2) per step: the branch
//! Hamiltonians are tridiagonal and the mechanical jump operators are
//! bidiagonal.
//!
//! Monitors: trace deviation and top-Fock-level occupancy at every requested
//! output, minimum eigenvalue (via a real symmetric embedding) at sampled
//! outputs. Monitor failure halves the step (doubles the step count) and
//! re-integrates; persistent failure is a hard error, never a silent result.

use num_complex::Complex64;

use crate::open_system::QubitDensityMatrix;
use crate::params::DerivedParams;

use super::fock::{coherent_amplitudes, thermal_weights, FockState};
use super::OracleError;

use nalgebra::{DMatrix, SymmetricEigen};

/// Dissipation rates in laboratory units (1/s), decoupled from
/// [`DerivedParams`] so tests can zero or scale individual channels exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladRates {
    pub gamma_1: f64,
    pub gamma_phi: f64,
    pub gamma_m: f64,
    pub n_th: f64,
}

impl LindbladRates {
    /// Rates of the given operating point.
    pub fn from_params(p: &DerivedParams) -> Self {
        LindbladRates {
            gamma_1: p.gamma_1,
            gamma_phi: p.gamma_phi,
            gamma_m: p.gamma_m,
            n_th: p.n_th,
        }
    }

    /// All channels off: unitary joint evolution.
    pub fn zero() -> Self {
        LindbladRates {
            gamma_1: 0.0,
            gamma_phi: 0.0,
            gamma_m: 0.0,
            n_th: 0.0,
        }
    }
}

/// Initial mechanical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechInit {
    /// Ground state.
    Vacuum,
    /// Coherent state.
    Coherent(Complex64),
    /// Thermal (truncated geometric) state at the given occupation.
    Thermal(f64),
}

/// Integrator knobs.
#[derive(Debug, Clone, Copy)]
pub struct LindbladOptions {
    /// Initial fixed-step resolution (steps per mechanical period).
    pub steps_per_period: usize,
    /// How many times the step may be halved before giving up.
    pub max_doublings: u32,
    /// Allowed deviation of the trace from 1.
    pub trace_tol: f64,
    /// Allowed negative eigenvalue magnitude.
    pub positivity_tol: f64,
    /// Allowed top-Fock-level occupancy.
    pub leakage_tol: f64,
    /// Number of output samples at which the (expensive) eigenvalue check
    /// runs; always includes the final output.
    pub positivity_checks: usize,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        LindbladOptions {
            steps_per_period: 2048,
            max_doublings: 6,
            trace_tol: 1e-8,
            positivity_tol: 1e-8,
            leakage_tol: 1e-8,
            positivity_checks: 4,
        }
    }
}

/// Joint qubit-mechanics density matrix in block form (`rho10` is implied by
/// Hermiticity).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    pub n_max: usize,
    /// Column-major `(n_max+1) x (n_max+1)` mechanical blocks.
    pub rho00: Vec<Complex64>,
    pub rho01: Vec<Complex64>,
    pub rho11: Vec<Complex64>,
}

impl JointDensity {
    fn m(&self) -> usize {
        self.n_max + 1
    }

    /// Total trace (real part; imaginary parts cancel by construction).
    pub fn trace(&self) -> f64 {
        let m = self.m();
        (0..m).map(|n| self.rho00[n + n * m].re + self.rho11[n + n * m].re).sum()
    }

    /// Reduced qubit state (mechanics traced out).
    pub fn reduced_qubit(&self) -> QubitDensityMatrix {
        let m = self.m();
        let mut rho00 = 0.0;
        let mut rho11 = 0.0;
        let mut rho01 = Complex64::new(0.0, 0.0);
        for n in 0..m {
            rho00 += self.rho00[n + n * m].re;
            rho11 += self.rho11[n + n * m].re;
            rho01 += self.rho01[n + n * m];
        }
        QubitDensityMatrix { rho00, rho11, rho01 }
    }

    /// Population of the top retained Fock level (truncation monitor).
    pub fn top_level_occupancy(&self) -> f64 {
        let m = self.m();
        let i = (m - 1) + (m - 1) * m;
        self.rho00[i].re + self.rho11[i].re
    }

    /// Mean mechanical occupation `<n>`.
    pub fn mech_occupation(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|n| n as f64 * (self.rho00[n + n * m].re + self.rho11[n + n * m].re))
            .sum()
    }

    /// Assembles the full `2m x 2m` Hermitian matrix as a real symmetric
    /// embedding `[[A, -B], [B, A]]` of `C = A + iB`, whose spectrum is that
    /// of `C` with every eigenvalue doubled.
    fn real_embedding(&self) -> DMatrix<f64> {
        let m = self.m();
        let d = 2 * m;
        let mut c = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..m {
            for i in 0..m {
                c[(i, j)] = self.rho00[i + j * m];
                c[(i, j + m)] = self.rho01[i + j * m];
                c[(i + m, j)] = self.rho01[j + i * m].conj();
                c[(i + m, j + m)] = self.rho11[i + j * m];
            }
        }
        let mut s = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for j in 0..d {
            for i in 0..d {
                let z = c[(i, j)];
                s[(i, j)] = z.re;
                s[(i + d, j + d)] = z.re;
                s[(i, j + d)] = -z.im;
                s[(i + d, j)] = z.im;
            }
        }
        s
    }

    /// Minimum eigenvalue of the joint density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.real_embedding())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Trace distance `(1/2) ||rho - sigma||_1` to another joint state.
    pub fn trace_distance(&self, other: &JointDensity) -> f64 {
        assert_eq!(self.n_max, other.n_max, "mismatched truncations");
        let mut diff = self.clone();
        let sub = |a: &mut Vec<Complex64>, b: &[Complex64]| {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= y;
            }
        };
        sub(&mut diff.rho00, &other.rho00);
        sub(&mut diff.rho01, &other.rho01);
        sub(&mut diff.rho11, &other.rho11);
        // The embedding doubles every eigenvalue: TD = (1/4) sum |lambda|.
        0.25 * SymmetricEigen::new(diff.real_embedding())
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum::<f64>()
    }

    /// Trace distance to a pure joint state.
    pub fn trace_distance_to_pure(&self, state: &FockState) -> f64 {
        assert_eq!(self.n_max, state.n_max, "mismatched truncations");
        let m = self.m();
        let outer = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::default(); m * m];
            for j in 0..m {
                for i in 0..m {
                    out[i + j * m] = a[i] * b[j].conj();
                }
            }
            out
        };
        let b0 = state.qubit_block(0);
        let b1 = state.qubit_block(1);
        let pure = JointDensity {
            n_max: self.n_max,
            rho00: outer(b0, b0),
            rho01: outer(b0, b1),
            rho11: outer(b1, b1),
        };
        self.trace_distance(&pure)
    }
}

/// Scaled, precomputed context for the right-hand side.
struct Rhs {
    m: usize,
    /// Branch Hamiltonian diagonals (equal: the number operator).
    diag: Vec<f64>,
    /// Off-diagonals `z_j sqrt(n+1)` per branch.
    off0: Vec<f64>,
    off1: Vec<f64>,
    /// sqrt lookup: `sq[i] = sqrt(i)`.
    sq: Vec<f64>,
    /// Scaled rates.
    down: f64,
    up: f64,
    g1: f64,
    coherence_decay: f64,
}

impl Rhs {
    fn new(p: &DerivedParams, rates: &LindbladRates, n_max: usize) -> Self {
        let m = n_max + 1;
        let z0 = p.k + p.g_bar;
        let z1 = -p.k + p.g_bar;
        let sq: Vec<f64> = (0..=m).map(|i| (i as f64).sqrt()).collect();
        let w = p.omega_m;
        Rhs {
            m,
            diag: (0..m).map(|n| n as f64).collect(),
            off0: (0..m).map(|n| z0 * sq[n + 1]).collect(),
            off1: (0..m).map(|n| z1 * sq[n + 1]).collect(),
            sq,
            down: rates.gamma_m / w * (rates.n_th + 1.0),
            up: rates.gamma_m / w * rates.n_th,
            g1: rates.gamma_1 / w,
            coherence_decay: 0.5 * rates.gamma_1 / w + 2.0 * rates.gamma_phi / w,
        }
    }

    /// `out += -i (H_L x - x H_R)` for tridiagonal `H` given by
    /// `(diag, off_l)` and `(diag, off_r)`.
    fn coherent_into(&self, x: &[Complex64], out: &mut [Complex64], off_l: &[f64], off_r: &[f64]) {
        let m = self.m;
        for j in 0..m {
            let col = &x[j * m..(j + 1) * m];
            let out_col = &mut out[j * m..(j + 1) * m];
            // H_L x, column j.
            for i in 0..m {
                let mut acc = col[i] * self.diag[i];
                if i > 0 {
                    acc += col[i - 1] * off_l[i - 1];
                }
                if i + 1 < m {
                    acc += col[i + 1] * off_l[i];
                }
                out_col[i] += Complex64::new(acc.im, -acc.re); // -i * acc
            }
            // x H_R, column j: needs columns j-1 and j+1 of x.
            for i in 0..m {
                let mut acc = col[i] * self.diag[j];
                if j > 0 {
                    acc += x[i + (j - 1) * m] * off_r[j - 1];
                }
                if j + 1 < m {
                    acc += x[i + (j + 1) * m] * off_r[j];
                }
                out_col[i] -= Complex64::new(acc.im, -acc.re); // +i * acc
            }
        }
    }

    /// Thermal mechanical dissipator, identical on every block:
    /// `out += down (a x a^dag - {n, x}/2) + up (a^dag x a - {a a^dag, x}/2)`.
    fn mech_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        if self.down == 0.0 && self.up == 0.0 {
            return;
        }
        let m = self.m;
        for j in 0..m {
            for i in 0..m {
                let idx = i + j * m;
                let decay = self.down * (i + j) as f64 + self.up * (i + j + 2) as f64;
                let mut acc = x[idx] * (-0.5 * decay);
                if i + 1 < m && j + 1 < m {
                    acc += x[(i + 1) + (j + 1) * m] * (self.down * self.sq[i + 1] * self.sq[j + 1]);
                }
                if i > 0 && j > 0 {
                    acc += x[(i - 1) + (j - 1) * m] * (self.up * self.sq[i] * self.sq[j]);
                }
                out[idx] += acc;
            }
        }
    }

    /// Full right-hand side into `out` (overwritten).
    fn eval(&self, s: &Blocks, out: &mut Blocks) {
        out.clear();
        self.coherent_into(&s.r00, &mut out.r00, &self.off0, &self.off0);
        self.coherent_into(&s.r01, &mut out.r01, &self.off0, &self.off1);
        self.coherent_into(&s.r11, &mut out.r11, &self.off1, &self.off1);
        self.mech_into(&s.r00, &mut out.r00);
        self.mech_into(&s.r01, &mut out.r01);
        self.mech_into(&s.r11, &mut out.r11);
        if self.g1 != 0.0 {
            for (o, x) in out.r00.iter_mut().zip(&s.r11) {
                *o += x * self.g1;
            }
            for (o, x) in out.r11.iter_mut().zip(&s.r11) {
                *o -= x * self.g1;
            }
        }
        let gc = self.coherence_decay;
        if gc != 0.0 {
            for (o, x) in out.r01.iter_mut().zip(&s.r01) {
                *o -= x * gc;
            }
        }
    }
}

/// Working triple of mechanical blocks.
#[derive(Clone)]
struct Blocks {
    r00: Vec<Complex64>,
    r01: Vec<Complex64>,
    r11: Vec<Complex64>,
}

impl Blocks {
    fn zeros(m: usize) -> Self {
        Blocks {
            r00: vec![Complex64::default(); m * m],
            r01: vec![Complex64::default(); m * m],
            r11: vec![Complex64::default(); m * m],
        }
    }

    fn clear(&mut self) {
        for v in [&mut self.r00, &mut self.r01, &mut self.r11] {
            v.iter_mut().for_each(|x| *x = Complex64::default());
        }
    }

    /// `self = base + c * k`.
    fn set_linear(&mut self, base: &Blocks, c: f64, k: &Blocks) {
        let combine = |dst: &mut Vec<Complex64>, b: &[Complex64], kk: &[Complex64]| {
            for ((d, &x), &y) in dst.iter_mut().zip(b).zip(kk) {
                *d = x + y * c;
            }
        };
        combine(&mut self.r00, &base.r00, &k.r00);
        combine(&mut self.r01, &base.r01, &k.r01);
        combine(&mut self.r11, &base.r11, &k.r11);
    }

    /// `self += c * k`.
    fn axpy(&mut self, c: f64, k: &Blocks) {
        let add = |dst: &mut Vec<Complex64>, kk: &[Complex64]| {
            for (d, &y) in dst.iter_mut().zip(kk) {
                *d += y * c;
            }
        };
        add(&mut self.r00, &k.r00);
        add(&mut self.r01, &k.r01);
        add(&mut self.r11, &k.r11);
    }
}

fn initial_blocks(theta: f64, init: &MechInit, n_max: usize, leakage_tol: f64) -> Result<Blocks, OracleError> {
    let m = n_max + 1;
    let (c0, c1) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let mut b = Blocks::zeros(m);
    match init {
        MechInit::Vacuum => {
            b.r00[0] = Complex64::new(c0 * c0, 0.0);
            b.r01[0] = Complex64::new(c0 * c1, 0.0);
            b.r11[0] = Complex64::new(c1 * c1, 0.0);
        }
        MechInit::Coherent(alpha) => {
            let amps = coherent_amplitudes(*alpha, n_max);
            let top = amps[n_max].norm_sqr();
            if top >= leakage_tol {
                return Err(OracleError::TruncationLeakage {
                    n_max,
                    tau: 0.0,
                    leakage: top,
                    tol: leakage_tol,
                });
            }
            for j in 0..m {
                for i in 0..m {
                    let outer = amps[i] * amps[j].conj();
                    b.r00[i + j * m] = outer * (c0 * c0);
                    b.r01[i + j * m] = outer * (c0 * c1);
                    b.r11[i + j * m] = outer * (c1 * c1);
                }
            }
        }
        MechInit::Thermal(n_th) => {
            let (weights, tail) = thermal_weights(*n_th, n_max);
            if tail >= leakage_tol {
                return Err(OracleError::TruncationLeakage {
                    n_max,
                    tau: 0.0,
                    leakage: tail,
                    tol: leakage_tol,
                });
            }
            for (n, &w) in weights.iter().enumerate() {
                b.r00[n + n * m] = Complex64::new(c0 * c0 * w, 0.0);
                b.r01[n + n * m] = Complex64::new(c0 * c1 * w, 0.0);
                b.r11[n + n * m] = Complex64::new(c1 * c1 * w, 0.0);
            }
        }
    }
    Ok(b)
}

/// Integrates the dissipative model and returns the joint state at each
/// requested dimensionless time (`taus` must be ascending, starting at
/// `>= 0`). Step halving repeats the whole integration until the monitors
/// pass or the doubling budget is exhausted.
pub fn lindblad_evolve(
    p: &DerivedParams,
    rates: &LindbladRates,
    theta: f64,
    init: &MechInit,
    taus: &[f64],
    n_max: usize,
    opts: &LindbladOptions,
) -> Result<Vec<JointDensity>, OracleError> {
    assert!(!taus.is_empty(), "need at least one output time");
    assert!(
        taus.windows(2).all(|w| w[0] <= w[1]) && taus[0] >= 0.0,
        "output times must be ascending and non-negative"
    );
    let rhs = Rhs::new(p, rates, n_max);
    let init_blocks = initial_blocks(theta, init, n_max, opts.leakage_tol)?;

    let mut steps = opts.steps_per_period.max(8);
    let mut worst_defect;
    for _attempt in 0..=opts.max_doublings {
        let result = integrate_once(&rhs, &init_blocks, taus, n_max, steps, opts);
        match result {
            Ok(outputs) => return Ok(outputs),
            Err(AttemptFailure::Fatal(e)) => return Err(e),
            Err(AttemptFailure::MonitorDefect(d)) => {
                worst_defect = d;
                steps *= 2;
                if _attempt == opts.max_doublings {
                    return Err(OracleError::StepLimitExceeded {
                        steps: steps / 2,
                        defect: worst_defect,
                    });
                }
            }
        }
    }
    unreachable!("doubling loop returns on every path");
}

enum AttemptFailure {
    /// Retry with a smaller step.
    MonitorDefect(f64),
    /// No point retrying (truncation too small).
    Fatal(OracleError),
}

fn integrate_once(
    rhs: &Rhs,
    init: &Blocks,
    taus: &[f64],
    n_max: usize,
    steps_per_period: usize,
    opts: &LindbladOptions,
) -> Result<Vec<JointDensity>, AttemptFailure> {
    let m = n_max + 1;
    let h_target = std::f64::consts::TAU / steps_per_period as f64;
    let mut state = init.clone();
    let mut k1 = Blocks::zeros(m);
    let mut k2 = Blocks::zeros(m);
    let mut k3 = Blocks::zeros(m);
    let mut k4 = Blocks::zeros(m);
    let mut stage = Blocks::zeros(m);

    let mut outputs = Vec::with_capacity(taus.len());
    let positivity_at = positivity_sample_set(taus.len(), opts.positivity_checks);
    let mut tau_now = 0.0;
    for (out_idx, &tau_out) in taus.iter().enumerate() {
        let span = tau_out - tau_now;
        if span > 0.0 {
            let n_steps = (span / h_target).ceil() as usize;
            let h = span / n_steps as f64;
            for _ in 0..n_steps {
                rhs.eval(&state, &mut k1);
                stage.set_linear(&state, 0.5 * h, &k1);
                rhs.eval(&stage, &mut k2);
                stage.set_linear(&state, 0.5 * h, &k2);
                rhs.eval(&stage, &mut k3);
                stage.set_linear(&state, h, &k3);
                rhs.eval(&stage, &mut k4);
                state.axpy(h / 6.0, &k1);
                state.axpy(h / 3.0, &k2);
                state.axpy(h / 3.0, &k3);
                state.axpy(h / 6.0, &k4);
            }
            tau_now = tau_out;
        }
        let snapshot = JointDensity {
            n_max,
            rho00: state.r00.clone(),
            rho01: state.r01.clone(),
            rho11: state.r11.clone(),
        };
        // Order matters: a broken trace means the step is too coarse (the
        // state is garbage, retry smaller); leakage with an intact trace
        // means the truncation really is too small (fatal).
        let trace_defect = (snapshot.trace() - 1.0).abs();
        if trace_defect > opts.trace_tol {
            return Err(AttemptFailure::MonitorDefect(trace_defect));
        }
        let leakage = snapshot.top_level_occupancy();
        if leakage >= opts.leakage_tol {
            return Err(AttemptFailure::Fatal(OracleError::TruncationLeakage {
                n_max,
                tau: tau_out,
                leakage,
                tol: opts.leakage_tol,
            }));
        }
        if positivity_at.contains(&out_idx) {
            let min_eig = snapshot.min_eigenvalue();
            if min_eig < -opts.positivity_tol {
                return Err(AttemptFailure::MonitorDefect(-min_eig));
            }
        }
        outputs.push(snapshot);
    }
    Ok(outputs)
}

/// Indices of the outputs that get the eigenvalue check: evenly spaced,
/// always including the last.
fn positivity_sample_set(n_outputs: usize, checks: usize) -> Vec<usize> {
    if checks == 0 || n_outputs == 0 {
        return Vec::new();
    }
    if n_outputs <= checks {
        return (0..n_outputs).collect();
    }
    let mut set: Vec<usize> = (1..=checks)
        .map(|i| i * n_outputs / checks - 1)
        .collect();
    set.dedup();
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_system::tests_support::test_point;
    use crate::open_system;
    use crate::oracle::pure::evolve_pure;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn unitary_limit_matches_pure_propagation() {
        let p = test_point(0.2, 0.5);
        let theta = 1.0;
        let alpha = Complex64::new(0.3, -0.2);
        let n_max = 40;
        let taus = [0.9, 2.0];
        let states = lindblad_evolve(
            &p,
            &LindbladRates::zero(),
            theta,
            &MechInit::Coherent(alpha),
            &taus,
            n_max,
            &LindbladOptions::default(),
        )
        .unwrap();
        let init = FockState::from_qubit_and_coherent(theta, alpha, n_max, 1e-8).unwrap();
        for (rho, &tau) in states.iter().zip(&taus) {
            let pure = evolve_pure(&init, tau, &p, 1e-8).unwrap();
            let td = rho.trace_distance_to_pure(&pure);
            assert!(td < 1e-6, "trace distance to exact pure state: {td:.3e}");
        }
    }

    #[test]
    fn relaxation_only_populations_are_exact_exponentials() {
        let p = test_point(0.2, 0.5);
        let theta = 1.2;
        let rates = LindbladRates {
            gamma_1: 0.03 * p.omega_m,
            gamma_phi: 0.0,
            gamma_m: 0.0,
            n_th: 0.0,
        };
        let taus = [1.0, 3.5, TAU];
        let states = lindblad_evolve(
            &p,
            &rates,
            theta,
            &MechInit::Vacuum,
            &taus,
            24,
            &LindbladOptions::default(),
        )
        .unwrap();
        for (rho, &tau) in states.iter().zip(&taus) {
            let q = rho.reduced_qubit();
            let expected = (0.5 * theta).sin().powi(2) * (-0.03 * tau).exp();
            assert_relative_eq!(q.rho11, expected, max_relative = 1e-9);
            assert_relative_eq!(rho.trace(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn decoupled_qubit_coherence_matches_analytic_rate() {
        // k = 0: the mechanics cannot distinguish the qubit branches, so the
        // reduced coherence decays at exactly Gamma_2 with no extra phase.
        let p = test_point(0.0, 0.5);
        let rates = LindbladRates {
            gamma_1: 0.02 * p.omega_m,
            gamma_phi: 0.015 * p.omega_m,
            gamma_m: 1e-4 * p.omega_m,
            n_th: 0.5,
        };
        let taus = [2.0, TAU];
        let states = lindblad_evolve(
            &p,
            &rates,
            FRAC_PI_2,
            &MechInit::Thermal(0.5),
            &taus,
            40,
            &LindbladOptions::default(),
        )
        .unwrap();
        let gamma_2 = 0.5 * rates.gamma_1 + 2.0 * rates.gamma_phi;
        for (rho, &tau) in states.iter().zip(&taus) {
            let q = rho.reduced_qubit();
            let t = tau / p.omega_m;
            assert_relative_eq!(q.rho01.norm(), 0.5 * (-gamma_2 * t).exp(), max_relative = 1e-8);
            assert!(q.rho01.im.abs() < 1e-10, "no phase for k = 0");
            assert_relative_eq!(q.rho11, 0.5 * (-rates.gamma_1 * t).exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn full_model_stays_physical_with_thermal_init() {
        let p = test_point(0.2, 0.5);
        let rates = LindbladRates {
            gamma_1: 0.01 * p.omega_m,
            gamma_phi: 0.01 * p.omega_m,
            gamma_m: 1e-4 * p.omega_m,
            n_th: 2.0,
        };
        let n_max = crate::oracle::fock::n_max_thermal(2.0, p.k, p.g_bar);
        let states = lindblad_evolve(
            &p,
            &rates,
            FRAC_PI_2,
            &MechInit::Thermal(2.0),
            &[PI, TAU],
            n_max,
            &LindbladOptions::default(),
        )
        .unwrap();
        for rho in &states {
            assert_relative_eq!(rho.trace(), 1.0, max_relative = 1e-10);
            assert!(rho.min_eigenvalue() > -1e-8);
            let q = rho.reduced_qubit();
            assert!(q.positivity_defect() < 1e-10);
        }
        // At the revival the analytic stroboscopic model should be close
        // (detailed tolerance budget lives in the acceptance suite):
        // rho11 = e^{-Gamma_1 t}/2, |rho01| = e^{-Gamma_2' t}/2 with the
        // mechanically induced dephasing folded in, phase +8 pi k Gbar.
        let q = states[1].reduced_qubit();
        let t = TAU / p.omega_m;
        let gamma_2 = 0.5 * rates.gamma_1
            + 2.0 * (rates.gamma_phi + rates.gamma_m * p.k * p.k * (2.0 * rates.n_th + 1.0));
        let analytic = open_system::QubitDensityMatrix {
            rho00: 1.0 - 0.5 * (-rates.gamma_1 * t).exp(),
            rho11: 0.5 * (-rates.gamma_1 * t).exp(),
            rho01: Complex64::from_polar(
                0.5 * (-gamma_2 * t).exp(),
                8.0 * PI * p.k * p.g_bar,
            ),
        };
        let td = q.trace_distance(&analytic);
        assert!(td < 5e-3, "stroboscopic model too far: {td:.3e}");
    }

    #[test]
    fn unstable_step_is_caught_and_reported() {
        let p = test_point(0.2, 0.0);
        let rates = LindbladRates {
            gamma_1: 0.0,
            gamma_phi: 0.0,
            gamma_m: 5.0 * p.omega_m,
            n_th: 1.0,
        };
        let opts = LindbladOptions {
            steps_per_period: 8,
            max_doublings: 0,
            ..LindbladOptions::default()
        };
        match lindblad_evolve(&p, &rates, FRAC_PI_2, &MechInit::Thermal(1.0), &[TAU], 30, &opts) {
            Err(OracleError::StepLimitExceeded { .. }) => {}
            other => panic!("expected step-limit error, got {other:?}"),
        }
    }

    #[test]
    fn positivity_sampling_always_covers_the_last_output() {
        assert_eq!(positivity_sample_set(3, 4), vec![0, 1, 2]);
        let set = positivity_sample_set(20, 4);
        assert!(set.contains(&19));
        assert_eq!(positivity_sample_set(0, 4), Vec::<usize>::new());
    }
}
