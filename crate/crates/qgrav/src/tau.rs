//! Cycle-aware dimensionless time `tau = omega_m t`.
//!
//! Mechanical revivals live at exact multiples of `2 pi`, and several
//! observables (branch separation, linear entropy, dephasing envelope) must
//! vanish *identically* there. Storing `tau` as a plain `f64` loses that:
//! `sin(2 pi n)` computed from a rounded product is only zero to
//! `~n * 2 pi * eps`. [`Tau`] instead stores an integer count of half cycles
//! plus a fractional phase in `[0, pi)`, so trigonometric range reduction is
//! exact and `sin`, `1 - cos`, and `eta = 1 - exp(-i tau)` are *exactly* zero
//! at revivals constructed from grid indices.

use num_complex::Complex64;

use std::f64::consts::PI;

/// Dimensionless time `tau = omega_m t >= 0` with exact half-cycle
/// bookkeeping: `tau = half_cycles * pi + frac`, `frac` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau {
    half_cycles: i64,
    frac: f64,
}

impl Tau {
    /// Zero time.
    pub const ZERO: Tau = Tau { half_cycles: 0, frac: 0.0 };

    /// Builds from a plain angle in radians (must be finite and >= 0).
    ///
    /// The split inherits the rounding already present in `radians`; use the
    /// grid constructors when exact revival alignment matters.
    pub fn from_radians(radians: f64) -> Tau {
        assert!(
            radians.is_finite() && radians >= 0.0,
            "tau must be finite and non-negative, got {radians}"
        );
        let half_cycles = (radians / PI).floor() as i64;
        let frac = radians - half_cycles as f64 * PI;
        // Guard against frac landing exactly on pi after rounding.
        if frac >= PI {
            Tau { half_cycles: half_cycles + 1, frac: frac - PI }
        } else {
            Tau { half_cycles, frac: frac.max(0.0) }
        }
    }

    /// Exactly `n` half cycles: `tau = n pi`.
    pub fn from_half_cycles(n: i64) -> Tau {
        assert!(n >= 0, "tau must be non-negative, got {n} half cycles");
        Tau { half_cycles: n, frac: 0.0 }
    }

    /// Exactly `l` full mechanical cycles: `tau = 2 pi l` (a revival).
    pub fn from_cycles(l: i64) -> Tau {
        Tau::from_half_cycles(2 * l)
    }

    /// Grid point `tau = 2 pi step / steps_per_period`, with the integer part
    /// split off exactly so that every multiple of half a period lands on an
    /// exact [`Tau`].
    pub fn from_period_grid(step: u64, steps_per_period: u32) -> Tau {
        assert!(steps_per_period > 0, "steps_per_period must be positive");
        let spp = steps_per_period as u64;
        let numerator = 2 * step; // tau / pi = numerator / spp
        let half_cycles = (numerator / spp) as i64;
        let rem = numerator % spp;
        Tau {
            half_cycles,
            frac: PI * rem as f64 / spp as f64,
        }
    }

    /// The angle as a plain `f64` (rounds once, at the end).
    pub fn radians(&self) -> f64 {
        self.half_cycles as f64 * PI + self.frac
    }

    /// `tau / pi` (exact integer at half-cycle points).
    pub fn over_pi(&self) -> f64 {
        self.half_cycles as f64 + self.frac / PI
    }

    /// Physical time in seconds for a mechanical angular frequency `omega_m`.
    pub fn seconds(&self, omega_m: f64) -> f64 {
        self.radians() / omega_m
    }

    /// Number of completed half cycles.
    pub fn half_cycles(&self) -> i64 {
        self.half_cycles
    }

    /// True exactly at revivals `tau = 2 pi l`.
    pub fn is_revival(&self) -> bool {
        self.frac == 0.0 && self.half_cycles % 2 == 0
    }

    /// `sin(tau)`, exactly 0 at half-cycle points.
    pub fn sin(&self) -> f64 {
        let s = self.frac.sin();
        if self.half_cycles % 2 == 0 {
            s
        } else {
            -s
        }
    }

    /// `cos(tau)`.
    pub fn cos(&self) -> f64 {
        let c = self.frac.cos();
        if self.half_cycles % 2 == 0 {
            c
        } else {
            -c
        }
    }

    /// `1 - cos(tau)` without cancellation: `2 sin^2(tau/2)` on even half
    /// cycles, `1 + cos(frac) = 2 cos^2(frac/2)` on odd ones. Exactly 0 at
    /// revivals, exactly 2 at odd half cycles.
    pub fn one_minus_cos(&self) -> f64 {
        if self.half_cycles % 2 == 0 {
            let s = (0.5 * self.frac).sin();
            2.0 * s * s
        } else {
            let c = (0.5 * self.frac).cos();
            2.0 * c * c
        }
    }

    /// `eta(tau) = 1 - exp(-i tau) = (1 - cos tau) + i sin tau`.
    pub fn eta(&self) -> Complex64 {
        Complex64::new(self.one_minus_cos(), self.sin())
    }

    /// `|eta|^2 = 2 (1 - cos tau)`, exactly 0 at revivals.
    pub fn eta_norm_sqr(&self) -> f64 {
        2.0 * self.one_minus_cos()
    }

    /// `tau - sin(tau)` (the anharmonic phase clock). Exactly `pi * n` at
    /// half-cycle points.
    pub fn minus_sin(&self) -> f64 {
        self.radians() - self.sin()
    }
}
