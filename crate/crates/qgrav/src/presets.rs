//! Bundled reference operating points.

use crate::params::DeviceInput;

/// Representative 100 kHz-class device: sub-microgram membrane-scale
/// resonator with very high mechanical Q, strongly flux-coupled to a
/// transmon, at millikelvin bath temperature. Gives `k = 0.2`.
pub fn scenario_1() -> DeviceInput {
    DeviceInput {
        f_m_hz: 1.0e5,
        m_eff_kg: 5.3e-10,
        g0_over_2pi_hz: 2.0e4,
        q_m: 1.0e9,
        t_bath_k: 0.02,
        t1_s: 0.8e-3,
        t_phi_s: 1.5e-3,
        f_r: 0.995,
        theta_rad: std::f64::consts::FRAC_PI_2,
        alpha_re: 0.0,
        alpha_im: 0.0,
        g_m_per_s2: 9.81,
        t_over_s: 0.0,
    }
}

/// Representative 20 kHz-class device: heavier (10 ug) resonator with an even
/// higher quality factor; same qubit coherence and readout as
/// [`scenario_1`]. Gives `k = 0.2` at a larger lever arm.
pub fn scenario_2() -> DeviceInput {
    DeviceInput {
        f_m_hz: 2.0e4,
        m_eff_kg: 1.0e-8,
        g0_over_2pi_hz: 4.0e3,
        q_m: 1.0e10,
        t_bath_k: 0.02,
        t1_s: 0.8e-3,
        t_phi_s: 1.5e-3,
        f_r: 0.995,
        theta_rad: std::f64::consts::FRAC_PI_2,
        alpha_re: 0.0,
        alpha_im: 0.0,
        g_m_per_s2: 9.81,
        t_over_s: 0.0,
    }
}
