use std::f64::consts::LN_2;

use crate::error::{invalid, Result};
use crate::photophys::ParametricSpectrum;

/// How the emitter is pumped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// Continuous pumping G→E at a fixed rate (Hz).
    Cw { pump_rate: f64 },
    /// Rectangular pulses starting at `k / rep_rate`. A pulse of width `pulse_width`
    /// excites a ground-state emitter with probability `excitation_probability`;
    /// `pulse_width == 0` means instantaneous excitation without re-pumping.
    Pulsed {
        rep_rate: f64,
        excitation_probability: f64,
        pulse_width: f64,
    },
}

impl Drive {
    pub fn is_pulsed(&self) -> bool {
        matches!(self, Drive::Pulsed { .. })
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            Drive::Pulsed { rep_rate, .. } => Some(1.0 / rep_rate),
            Drive::Cw { .. } => None,
        }
    }
}

/// Three-level emitter: ground G, excited E, dark D.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterParams {
    /// Radiative lifetime of E (s).
    pub t1: f64,
    /// Pure-dephasing time (s); carried for the interferometry pipeline.
    pub t2_star: f64,
    pub drive: Drive,
    /// E→D rate (Hz).
    pub shelve_rate: f64,
    /// D→G rate (Hz).
    pub deshelve_rate: f64,
    pub spectrum: Option<ParametricSpectrum>,
}

impl EmitterParams {
    pub fn cw(t1: f64, pump_rate: f64) -> Self {
        EmitterParams {
            t1,
            t2_star: f64::INFINITY,
            drive: Drive::Cw { pump_rate },
            shelve_rate: 0.0,
            deshelve_rate: 0.0,
            spectrum: None,
        }
    }

    pub fn pulsed(t1: f64, rep_rate: f64, excitation_probability: f64, pulse_width: f64) -> Self {
        EmitterParams {
            drive: Drive::Pulsed {
                rep_rate,
                excitation_probability,
                pulse_width,
            },
            ..Self::cw(t1, 0.0)
        }
    }

    pub fn with_blinking(mut self, shelve_rate: f64, deshelve_rate: f64) -> Self {
        self.shelve_rate = shelve_rate;
        self.deshelve_rate = deshelve_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t1.is_finite()) {
            return Err(invalid(format!("T1 must be positive and finite, got {}", self.t1)));
        }
        if !(self.t2_star > 0.0) {
            return Err(invalid(format!("T2* must be positive, got {}", self.t2_star)));
        }
        for (name, v) in [("shelve_rate", self.shelve_rate), ("deshelve_rate", self.deshelve_rate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.shelve_rate > 0.0 && self.deshelve_rate == 0.0 {
            return Err(invalid(
                "a dark state with zero deshelve rate traps the emitter forever",
            ));
        }
        match self.drive {
            Drive::Cw { pump_rate } => {
                if !(pump_rate >= 0.0 && pump_rate.is_finite()) {
                    return Err(invalid(format!(
                        "pump rate must be finite and non-negative, got {pump_rate}"
                    )));
                }
            }
            Drive::Pulsed {
                rep_rate,
                excitation_probability: p,
                pulse_width,
            } => {
                if !(rep_rate > 0.0 && rep_rate.is_finite()) {
                    return Err(invalid(format!("repetition rate must be positive, got {rep_rate}")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(format!("excitation probability must lie in [0, 1], got {p}")));
                }
                if !(pulse_width >= 0.0 && pulse_width < 1.0 / rep_rate) {
                    return Err(invalid("pulse width must be non-negative and shorter than the period"));
                }
                if p == 1.0 && pulse_width > 0.0 {
                    return Err(invalid(
                        "excitation probability 1 needs an instantaneous pulse (pulse_width = 0)",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Pump rate during a pulse that gives the configured excitation probability.
    pub(crate) fn pulse_pump_rate(&self) -> f64 {
        match self.drive {
            Drive::Pulsed {
                excitation_probability: p,
                pulse_width,
                ..
            } if pulse_width > 0.0 => -(-p).ln_1p() / pulse_width,
            _ => 0.0,
        }
    }
}

/// Detector chain applied to emitted photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Overall probability that an emitted photon is recorded.
    pub efficiency: f64,
    /// Gaussian timing jitter FWHM per detector (s).
    pub jitter_fwhm: f64,
    /// Non-paralysable dead time per channel (s).
    pub dead_time: f64,
    /// Dark counts per channel (Hz).
    pub dark_count_rate: f64,
    /// Time-tagger tick (ps).
    pub resolution_ps: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel::ideal()
    }
}

impl DetectorModel {
    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            jitter_fwhm: 0.0,
            dead_time: 0.0,
            dark_count_rate: 0.0,
            resolution_ps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        for (name, v) in [
            ("jitter_fwhm", self.jitter_fwhm),
            ("dead_time", self.dead_time),
            ("dark_count_rate", self.dark_count_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.resolution_ps == 0 {
            return Err(invalid("resolution must be at least 1 ps"));
        }
        Ok(())
    }
}

/// Run settings for one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Acquisition time (s).
    pub duration: f64,
    pub seed: u64,
    /// Splits the run into independently seeded segments of this length, which
    /// may be simulated in parallel. `None` runs a single segment.
    pub segment_duration: Option<f64>,
}

impl SimConfig {
    pub fn new(duration: f64, seed: u64) -> Self {
        SimConfig {
            duration,
            seed,
            segment_duration: None,
        }
    }

    pub fn with_segments(mut self, segment_duration: f64) -> Self {
        self.segment_duration = Some(segment_duration);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid(format!(
                "duration must be positive and finite, got {}",
                self.duration
            )));
        }
        if let Some(s) = self.segment_duration {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(format!("segment duration must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// CW pump rate for a drive power, chosen so that `pump_rate·T1 = P/P_sat`.
pub fn cw_pump_rate(power: f64, p_sat: f64, t1: f64) -> Result<f64> {
    if !(power >= 0.0) || !(p_sat > 0.0) || !(t1 > 0.0) {
        return Err(invalid("power must be non-negative and P_sat, T1 positive"));
    }
    Ok(power / p_sat / t1)
}

/// Per-pulse excitation probability `1 − exp(−P/P_ref)`.
pub fn pulsed_excitation_probability(power: f64, p_ref: f64) -> Result<f64> {
    if !(power >= 0.0) || !(p_ref > 0.0) {
        return Err(invalid("power must be non-negative and P_ref positive"));
    }
    Ok(-(-power / p_ref).exp_m1())
}

/// Reference power that makes the pulsed saturation power a half-excitation point,
/// `P_ref = P_sat / ln 2`.
pub fn pulsed_reference_power(p_sat: f64) -> f64 {
    p_sat / LN_2
}
