//! Reference emitter: measured values and the model constants calibrated to them.

use crate::emitter::{analytic_g2, calibrate_blinking, DetectorModel, EmitterParams};
use crate::error::Result;
use crate::photophys::{ComponentKind, FilterSpec, LorentzianComponent, ParametricSpectrum};
use crate::units::{FS, MW, NS, PS, US};

pub const T1: f64 = 2.54 * NS;
pub const T1_STDERR: f64 = 0.04 * NS;
pub const T2_STAR_ZPL: f64 = 382.0 * FS;
pub const T2_STAR_ZPL_STDERR: f64 = 11.0 * FS;
pub const T2_STAR_FULL: f64 = 68.0 * FS;
pub const T2_STAR_FULL_STDERR: f64 = 4.0 * FS;
pub const V0_ZPL: f64 = 0.8;

/// CW saturation curve.
pub const I_INF_CW: f64 = 18.0e3;
pub const I_INF_CW_STDERR: f64 = 0.4e3;
pub const P_SAT_CW: f64 = 0.54 * MW;
pub const P_SAT_CW_STDERR: f64 = 0.09 * MW;

/// Pulsed saturation curve.
pub const I_INF_PULSED: f64 = 3.2e3;
pub const P_SAT_PULSED: f64 = 42.0e-6;
pub const REP_RATE: f64 = 40.0e6;

/// Pulse length that makes re-excitation give g2(0) ≈ 0.11 at 1.2·P_sat.
pub const PULSE_WIDTH: f64 = 650.0 * PS;
pub const PULSED_POWER_OVER_PSAT: f64 = 1.2;
pub const PULSED_G2_ZERO: f64 = 0.11;

/// Zero-phonon line centre (eV) and FWHM (eV).
pub const ZPL_CENTER_EV: f64 = 1.747;
pub const ZPL_FWHM_EV: f64 = 0.005;
pub const DW_FACTOR: f64 = 0.77;
/// Half width of the rectangular ZPL filter (eV).
pub const ZPL_FILTER_HALF_WIDTH_EV: f64 = 0.0045;

/// Antibunching time at the lowest CW power.
pub const TAU1_LOW: f64 = 2.78 * NS;

/// Coherence times of the three further emitters (fixtures).
pub const EMITTER_I_T2_STAR: (f64, f64) = (44.0 * FS, 2.0 * FS);
pub const EMITTER_II_T2_STAR: (f64, f64) = (90.0 * FS, 4.0 * FS);
pub const EMITTER_III_T2_STAR: (f64, f64) = (20.0 * FS, 1.0 * FS);

/// Spectrum of the reference emitter: ZPL, two low-energy phonon modes and an
/// LO phonon replica.
pub fn reference_spectrum() -> ParametricSpectrum {
    let c = |center, fwhm, area, kind| LorentzianComponent::new(center, fwhm, area, kind).expect("valid constant");
    ParametricSpectrum::new(vec![
        c(ZPL_CENTER_EV, ZPL_FWHM_EV, 0.77, ComponentKind::Zpl),
        c(1.7405, 0.010, 0.13, ComponentKind::LePhonon),
        c(1.7545, 0.009, 0.07, ComponentKind::LePhonon),
        c(1.582, 0.030, 0.03, ComponentKind::LoPhonon),
    ])
    .expect("non-empty")
}

/// Rectangular filter around the ZPL.
pub fn zpl_filter() -> FilterSpec {
    FilterSpec::window(ZPL_CENTER_EV, ZPL_FILTER_HALF_WIDTH_EV).expect("valid constant")
}

/// One CW power point of the blinking study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkingPoint {
    pub power_over_psat: f64,
    /// Target bunching time (s).
    pub tau2: f64,
    /// Target bunching amplitude.
    pub a: f64,
}

/// Low, medium and high CW power. The low and high bunching times are the
/// measured ones; the medium point and the amplitudes are chosen to interpolate.
pub const BLINKING_POINTS: [BlinkingPoint; 3] = [
    BlinkingPoint {
        power_over_psat: 0.07,
        tau2: 2.28 * US,
        a: 0.2,
    },
    BlinkingPoint {
        power_over_psat: 1.85,
        tau2: 0.30 * US,
        a: 1.0,
    },
    BlinkingPoint {
        power_over_psat: 4.76,
        tau2: 0.08 * US,
        a: 3.0,
    },
];

/// Microscopic rates for one power point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedRates {
    pub t1: f64,
    pub pump_rate: f64,
    pub shelve_rate: f64,
    pub deshelve_rate: f64,
}

impl CalibratedRates {
    pub fn emitter(&self) -> EmitterParams {
        EmitterParams::cw(self.t1, self.pump_rate).with_blinking(self.shelve_rate, self.deshelve_rate)
    }
}

/// Radiative lifetime used for the CW blinking series.
///
/// A three-level emitter always has an antibunching time shorter than T1, so
/// matching the low-power antibunching time of 2.78 ns needs a lifetime a little
/// above the 2.54 ns measured under pulsed excitation.
pub fn cw_series_t1() -> Result<f64> {
    let low = BLINKING_POINTS[0];
    let mut t1 = TAU1_LOW * (1.0 + low.power_over_psat);
    for _ in 0..50 {
        let pump = low.power_over_psat / t1;
        let (ks, kd) = calibrate_blinking(t1, pump, low.tau2, low.a)?;
        let tau1 = analytic_g2(t1, pump, ks, kd)?.tau1;
        let next = t1 * TAU1_LOW / tau1;
        if (next - t1).abs() < 1e-15 * t1 {
            return Ok(next);
        }
        t1 = next;
    }
    Ok(t1)
}

/// Calibration table for [`BLINKING_POINTS`].
pub fn blinking_calibration() -> Result<Vec<CalibratedRates>> {
    let t1 = cw_series_t1()?;
    BLINKING_POINTS
        .iter()
        .map(|p| {
            let pump = p.power_over_psat / t1;
            let (shelve_rate, deshelve_rate) = calibrate_blinking(t1, pump, p.tau2, p.a)?;
            Ok(CalibratedRates {
                t1,
                pump_rate: pump,
                shelve_rate,
                deshelve_rate,
            })
        })
        .collect()
}

/// Superconducting-detector setup used for the CW correlation runs.
pub fn cw_detector(efficiency: f64) -> DetectorModel {
    DetectorModel {
        efficiency,
        jitter_fwhm: 200.0 * PS,
        dead_time: 0.0,
        dark_count_rate: 0.0,
        resolution_ps: 1,
    }
}

/// Low-jitter detector used for lifetime measurements.
pub fn lifetime_detector(efficiency: f64) -> DetectorModel {
    DetectorModel {
        efficiency,
        jitter_fwhm: 40.0 * PS,
        dead_time: 0.0,
        dark_count_rate: 0.0,
        resolution_ps: 1,
    }
}
