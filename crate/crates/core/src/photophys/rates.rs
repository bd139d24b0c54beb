//! Coherence-rate algebra, saturation and efficiency metrics.

use std::f64::consts::TAU;

use crate::error::{invalid, Result};
use crate::units::PLANCK_EV_S;

/// Radiative and pure-dephasing rates of an emitter.
///
/// All times are 1/e times. `gamma = 1/t1`, `gamma_star = 1/t2_star` and
/// `gamma_total = gamma + 2 gamma_star`; the coherence time is `t2 = 2/gamma_total`,
/// so `1/t2 = 1/(2 t1) + 1/t2_star`. The ZPL linewidth (FWHM, Hz) is
/// `gamma_total / 2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceRates {
    pub t1: f64,
    pub t2_star: f64,
    pub gamma: f64,
    pub gamma_star: f64,
    pub gamma_total: f64,
    pub t2: f64,
}

impl CoherenceRates {
    /// Spectral FWHM of the zero-phonon line in Hz.
    pub fn linewidth_hz(&self) -> f64 {
        self.gamma_total / TAU
    }

    pub fn linewidth_ev(&self) -> f64 {
        self.linewidth_hz() * PLANCK_EV_S
    }
}

/// Fills the rate structure from `t1` and `t2_star` (seconds).
///
/// Either time may be `f64::INFINITY` to switch that channel off.
pub fn coherence_from_times(t1: f64, t2_star: f64) -> Result<CoherenceRates> {
    if !(t1 > 0.0) || !(t2_star > 0.0) {
        return Err(invalid(format!("T1 and T2* must be positive, got {t1} and {t2_star}")));
    }
    let gamma = 1.0 / t1;
    let gamma_star = 1.0 / t2_star;
    let gamma_total = gamma + 2.0 * gamma_star;
    if !(gamma_total > 0.0) {
        return Err(invalid("T1 and T2* cannot both be infinite"));
    }
    Ok(CoherenceRates {
        t1,
        t2_star,
        gamma,
        gamma_star,
        gamma_total,
        t2: 2.0 / gamma_total,
    })
}

/// Recovers the pure-dephasing time from a measured total coherence time and `t1`.
pub fn t2_star_from_t2(t2: f64, t1: f64) -> Result<f64> {
    if !(t2 > 0.0) || !(t1 > 0.0) {
        return Err(invalid("T2 and T1 must be positive"));
    }
    let inv = 1.0 / t2 - 0.5 / t1;
    if !(inv > 0.0) {
        return Err(invalid(format!(
            "T2 = {t2} s exceeds the radiative limit 2·T1 = {} s",
            2.0 * t1
        )));
    }
    Ok(1.0 / inv)
}

/// Fourier-limited linewidth `1/(2π T1)` in Hz.
pub fn fourier_limited_linewidth(t1: f64) -> f64 {
    1.0 / (TAU * t1)
}

/// Mean wave-packet overlap `gamma / gamma_total = t2 / (2 t1)`.
pub fn indistinguishability(rates: &CoherenceRates) -> f64 {
    rates.gamma / rates.gamma_total
}

/// Source-to-detector efficiency under CW drive, `I_inf · T1`.
pub fn source_to_detector_efficiency(i_inf: f64, t1: f64) -> f64 {
    i_inf * t1
}

/// Source-to-detector efficiency under pulsed drive, `I_inf / rep_rate`.
pub fn pulsed_source_to_detector_efficiency(i_inf: f64, rep_rate: f64) -> f64 {
    i_inf / rep_rate
}

/// Two-level saturation curve `I(P) = I_inf / (1 + P_sat / P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationModel {
    pub i_inf: f64,
    pub p_sat: f64,
}

impl SaturationModel {
    pub fn new(i_inf: f64, p_sat: f64) -> Result<Self> {
        if !(i_inf > 0.0 && i_inf.is_finite()) || !(p_sat > 0.0 && p_sat.is_finite()) {
            return Err(invalid(format!(
                "I_inf and P_sat must be positive, got {i_inf} and {p_sat}"
            )));
        }
        Ok(SaturationModel { i_inf, p_sat })
    }
}

/// Count rate at pump power `power` (W).
pub fn saturation_intensity(model: &SaturationModel, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(invalid(format!("power must be positive, got {power}")));
    }
    Ok(model.i_inf / (1.0 + model.p_sat / power))
}
