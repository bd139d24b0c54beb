//! Physical constants and unit conversions. Everything internal is SI.

/// Planck constant in eV·s (CODATA 2018, exact).
pub const PLANCK_EV_S: f64 = 4.135_667_696e-15;

/// Ratio between the FWHM and the standard deviation of a Gaussian, 2·sqrt(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

pub const FS: f64 = 1e-15;
pub const PS: f64 = 1e-12;
pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;
pub const MEV: f64 = 1e-3;
pub const MW: f64 = 1e-3;

/// Photon energy (eV) to optical frequency (Hz).
pub fn ev_to_hz(energy_ev: f64) -> f64 {
    energy_ev / PLANCK_EV_S
}

/// Optical frequency (Hz) to photon energy (eV).
pub fn hz_to_ev(freq_hz: f64) -> f64 {
    freq_hz * PLANCK_EV_S
}

/// Photon energy (eV) to angular frequency (rad/s).
pub fn ev_to_rad_per_s(energy_ev: f64) -> f64 {
    std::f64::consts::TAU * ev_to_hz(energy_ev)
}

pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / FWHM_PER_SIGMA
}
