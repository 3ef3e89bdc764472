//! Physical constants (2018 CODATA exact values) and numeric guard rails.

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K). Exact by SI definition.
pub const K_B: f64 = 1.380_649e-23;

/// Largest exponent magnitude worth feeding to `exp(-x)`: beyond this the
/// result underflows to zero in f64, which is the physically correct limit for
/// every envelope in this crate (coherences, overlaps, thermal occupations).
pub const EXP_UNDERFLOW: f64 = 745.0;

/// `exp(-x)` for `x >= 0`, returning exactly 0.0 once the result would
/// underflow instead of producing subnormal noise.
#[inline]
pub fn exp_neg(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "exp_neg expects a non-negative decay exponent");
    if x > EXP_UNDERFLOW {
        0.0
    } else {
        (-x).exp()
    }
}
