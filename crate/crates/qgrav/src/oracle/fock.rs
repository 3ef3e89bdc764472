//! Truncated Fock-space states for the numerical oracle.
//!
//! The joint Hilbert space is qubit (x) mechanics with qubit-major layout:
//! amplitude index `q * (n_max + 1) + n` for qubit basis state `q` and Fock
//! level `n`. Every constructor enforces the truncation-leakage contract: the
//! occupancy of the top Fock level must stay below the configured tolerance,
//! otherwise the state (or evolution) is rejected with
//! [`OracleError::TruncationLeakage`].

use num_complex::Complex64;

use super::OracleError;

/// Mechanical Fock-space amplitudes of one Hilbert-space factor.
///
/// Coherent-state amplitudes `c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`,
/// evaluated in log space (magnitude from accumulated `ln n!`, phase from
/// `n arg(alpha)`) so large `|alpha|` cannot overflow intermediate terms.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let m = n_max + 1;
    let mut amps = Vec::with_capacity(m);
    let r = alpha.norm();
    if r == 0.0 {
        amps.push(Complex64::new(1.0, 0.0));
        amps.resize(m, Complex64::new(0.0, 0.0));
        return amps;
    }
    let ln_r = r.ln();
    let phi = alpha.arg();
    let mut ln_factorial = 0.0;
    for n in 0..m {
        if n > 0 {
            ln_factorial += (n as f64).ln();
        }
        let ln_mag = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_factorial;
        amps.push(Complex64::from_polar(ln_mag.exp(), phi * n as f64));
    }
    amps
}

/// Normalized truncated geometric (thermal) Fock weights
/// `p_n proportional to (n_th / (n_th + 1))^n`, together with the weight mass
/// lost to truncation (before renormalization).
pub fn thermal_weights(n_th: f64, n_max: usize) -> (Vec<f64>, f64) {
    assert!(n_th >= 0.0, "thermal occupation must be >= 0");
    let m = n_max + 1;
    if n_th == 0.0 {
        let mut w = vec![0.0; m];
        w[0] = 1.0;
        return (w, 0.0);
    }
    let ratio = n_th / (n_th + 1.0);
    let mut w = Vec::with_capacity(m);
    let mut term = 1.0 / (n_th + 1.0);
    let mut sum = 0.0;
    for _ in 0..m {
        w.push(term);
        sum += term;
        term *= ratio;
    }
    let tail = 1.0 - sum;
    for x in &mut w {
        *x /= sum;
    }
    (w, tail.max(0.0))
}

/// Default mechanical truncation for coherent-state work at conditional
/// displacement `k`: `ceil(4 (|alpha| + 2k + 2)^2)`.
pub fn default_n_max(alpha: Complex64, k: f64) -> usize {
    let s = alpha.norm() + 2.0 * k + 2.0;
    (4.0 * s * s).ceil() as usize
}

/// Truncation with the gravitational displacement folded in; required once
/// `Gbar` is not small, since both branches displace by up to
/// `2(k + |Gbar|)`.
pub fn n_max_with_gravity(alpha: Complex64, k: f64, g_bar: f64) -> usize {
    let s = alpha.norm() + 2.0 * (k + g_bar.abs()) + 2.0;
    (4.0 * s * s).ceil() as usize
}

/// Truncation for thermally occupied mechanics: geometric tail mass below
/// 1e-12 plus the coherent displacement margin on top of the occupied shell.
pub fn n_max_thermal(n_th: f64, k: f64, g_bar: f64) -> usize {
    let tail_n = if n_th <= 0.0 {
        0.0
    } else {
        let ratio = n_th / (n_th + 1.0);
        (1e-12f64.ln() / ratio.ln()).ceil()
    };
    let s = tail_n.sqrt() + 2.0 * (k + g_bar.abs()) + 2.0;
    (s * s).ceil() as usize
}

/// Pure state of the joint qubit-mechanics system on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    /// Highest retained Fock level (block length is `n_max + 1`).
    pub n_max: usize,
    /// Qubit-major amplitudes, length `2 (n_max + 1)`.
    pub amps: Vec<Complex64>,
}

impl FockState {
    /// Builds `(cos(theta/2)|0> + sin(theta/2)|1>) (x) |alpha>` and checks
    /// that the coherent state fits the truncation.
    pub fn from_qubit_and_coherent(
        theta: f64,
        alpha: Complex64,
        n_max: usize,
        leakage_tol: f64,
    ) -> Result<Self, OracleError> {
        let mech = coherent_amplitudes(alpha, n_max);
        let top = mech[n_max].norm_sqr();
        if top >= leakage_tol {
            return Err(OracleError::TruncationLeakage {
                n_max,
                tau: 0.0,
                leakage: top,
                tol: leakage_tol,
            });
        }
        let (c0, c1) = ((0.5 * theta).cos(), (0.5 * theta).sin());
        let m = n_max + 1;
        let mut amps = Vec::with_capacity(2 * m);
        amps.extend(mech.iter().map(|a| a * c0));
        amps.extend(mech.iter().map(|a| a * c1));
        Ok(FockState { n_max, amps })
    }

    /// Mechanical block of qubit basis state `q`.
    pub fn qubit_block(&self, q: usize) -> &[Complex64] {
        let m = self.n_max + 1;
        &self.amps[q * m..(q + 1) * m]
    }

    /// Squared norm of the full state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &FockState) -> Complex64 {
        assert_eq!(self.n_max, other.n_max, "mismatched truncations");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest top-Fock-level occupancy over the two qubit blocks; the
    /// truncation-quality monitor.
    pub fn top_level_occupancy(&self) -> f64 {
        let m = self.n_max + 1;
        self.amps[m - 1].norm_sqr().max(self.amps[2 * m - 1].norm_sqr())
    }

    /// Reduced qubit density matrix entries `(rho00, rho11, rho01)` obtained
    /// by tracing out the mechanics.
    pub fn reduced_qubit(&self) -> (f64, f64, Complex64) {
        let b0 = self.qubit_block(0);
        let b1 = self.qubit_block(1);
        let rho00: f64 = b0.iter().map(|a| a.norm_sqr()).sum();
        let rho11: f64 = b1.iter().map(|a| a.norm_sqr()).sum();
        let rho01: Complex64 = b0.iter().zip(b1).map(|(a, b)| a * b.conj()).sum();
        (rho00, rho11, rho01)
    }
}

/// Expectation value `<a>` of the mechanical lowering operator on a single
/// mechanical block.
pub fn mech_annihilation_expectation(block: &[Complex64]) -> Complex64 {
    let norm: f64 = block.iter().map(|a| a.norm_sqr()).sum();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..block.len() - 1 {
        acc += block[n].conj() * block[n + 1] * ((n + 1) as f64).sqrt();
    }
    acc / norm
}
