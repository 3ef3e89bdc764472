//! Fisher information of a qubit from its Bloch vector, with no reference to
//! any model structure: only the state `r(g)` and its parameter derivative
//! enter.

use crate::open_system::BlochVector;

use super::OracleError;

/// Quantum Fisher information of a qubit state with Bloch vector `r` and
/// parameter derivative `dr`:
///
/// `F_Q = |dr|^2 + (r . dr)^2 / (1 - |r|^2)`,
///
/// with the radial term dropped on the pure-state boundary `|r| = 1` (where
/// `r . dr = 0` for any family that stays physical). If `|r| -> 1` with a
/// genuinely nonzero radial derivative the formula has a pole and the input
/// family is unphysical: that is an error, not a large number.
pub fn qfi_mixed_bloch(r: &BlochVector, dr: &BlochVector) -> Result<f64, OracleError> {
    let r2 = r.dot(r);
    let radial = r.dot(dr);
    let tangential = dr.dot(dr);
    let one_minus_r2 = 1.0 - r2;
    // Boundary band: |r|^2 within numerical reach of 1.
    if one_minus_r2 <= 1e-12 {
        // A physical pure-state family satisfies d|r|^2/dg = 2 r.dr = 0.
        if radial * radial > 1e-9 * tangential.max(1e-300) {
            return Err(OracleError::SingularBlochQfi {
                r_norm: r2.sqrt(),
                radial_slope: radial,
            });
        }
        return Ok(tangential);
    }
    Ok(tangential + radial * radial / one_minus_r2)
}

/// Result of maximizing the readout CFI over the local-oscillator phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfiGridMax {
    /// Largest classical Fisher information found on the grid.
    pub f_max: f64,
    /// Local-oscillator phase at the maximum (rad, in `[0, 2 pi)`).
    pub phi_lo_at_max: f64,
}

/// Classical Fisher information of the two-outcome Ramsey readout at
/// local-oscillator phase `phi_lo`, from the Bloch vector alone:
/// `p_+ = (1 + r_x cos(phi_lo) - r_y sin(phi_lo)) / 2`,
/// `F_C = (d p_+)^2 / (p_+ p_-)`.
pub fn cfi_readout_at(r: &BlochVector, dr: &BlochVector, phi_lo: f64) -> f64 {
    let (s, c) = phi_lo.sin_cos();
    let p_plus = 0.5 * (1.0 + r.r_x * c - r.r_y * s);
    let dp = 0.5 * (dr.r_x * c - dr.r_y * s);
    let variance = p_plus * (1.0 - p_plus);
    if variance <= 0.0 {
        // Deterministic outcome: information is zero unless the probability
        // moves, which cannot happen for a physical family at the boundary.
        return 0.0;
    }
    dp * dp / variance
}

/// Scans `n_grid` equally spaced local-oscillator phases and returns the
/// maximum readout CFI.
pub fn cfi_readout_grid(r: &BlochVector, dr: &BlochVector, n_grid: usize) -> CfiGridMax {
    assert!(n_grid >= 4, "grid too coarse to be meaningful");
    let mut best = CfiGridMax {
        f_max: f64::NEG_INFINITY,
        phi_lo_at_max: 0.0,
    };
    for i in 0..n_grid {
        let phi = std::f64::consts::TAU * i as f64 / n_grid as f64;
        let f = cfi_readout_at(r, dr, phi);
        if f > best.f_max {
            best = CfiGridMax {
                f_max: f,
                phi_lo_at_max: phi,
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bloch(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector {
            r_x: x,
            r_y: y,
            r_z: z,
        }
    }

    #[test]
    fn pure_equatorial_rotation_has_unit_qfi_scale() {
        // r = (cos phi, sin phi, 0), dr = (-sin phi, cos phi, 0) * dphi/dg:
        // F = (dphi/dg)^2 for a pure state.
        let slope: f64 = 3.7;
        let phi: f64 = 0.9;
        let r = bloch(phi.cos(), phi.sin(), 0.0);
        let dr = bloch(-phi.sin() * slope, phi.cos() * slope, 0.0);
        let f = qfi_mixed_bloch(&r, &dr).unwrap();
        assert_relative_eq!(f, slope * slope, max_relative = 1e-12);
    }

    #[test]
    fn mixed_radial_term_matches_closed_form() {
        let r = bloch(0.3, 0.0, 0.4);
        let dr = bloch(0.2, -0.1, 0.05);
        let f = qfi_mixed_bloch(&r, &dr).unwrap();
        let r2 = 0.25;
        let radial = 0.3 * 0.2 + 0.4 * 0.05;
        let expected = (0.2f64 * 0.2 + 0.1 * 0.1 + 0.05 * 0.05) + radial * radial / (1.0 - r2);
        assert_relative_eq!(f, expected, max_relative = 1e-12);
    }

    #[test]
    fn boundary_with_radial_velocity_is_singular() {
        let r = bloch(1.0, 0.0, 0.0);
        let dr = bloch(0.5, 0.0, 0.0);
        match qfi_mixed_bloch(&r, &dr) {
            Err(OracleError::SingularBlochQfi { .. }) => {}
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn readout_grid_finds_quadrature_and_respects_quantum_bound() {
        // Equatorial mixed state rotating with g.
        let m = 0.6;
        let phi0: f64 = 1.1;
        let slope = 2.0e3;
        let r = bloch(m * phi0.cos(), m * phi0.sin(), 0.0);
        let dr = bloch(-m * phi0.sin() * slope, m * phi0.cos() * slope, 0.0);
        let grid = cfi_readout_grid(&r, &dr, 10_000);
        let qfi = qfi_mixed_bloch(&r, &dr).unwrap();
        // Analytic optimum for this family: m^2 slope^2 (= the quantum value
        // for a rotation-only family).
        assert_relative_eq!(grid.f_max, m * m * slope * slope, max_relative = 1e-6);
        assert!(grid.f_max <= qfi * (1.0 + 1e-9));
        // Every grid point is bounded by the quantum value.
        for i in 0..200 {
            let phi = std::f64::consts::TAU * i as f64 / 200.0;
            assert!(cfi_readout_at(&r, &dr, phi) <= qfi * (1.0 + 1e-9));
        }
    }
}
