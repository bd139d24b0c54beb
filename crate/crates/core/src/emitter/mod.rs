//! Monte Carlo time-tag generation for a three-level emitter.

mod config;
mod detect;
mod params;
mod sim;
mod three_level;

pub use config::{ConfigMap, SimSetup};
pub use detect::{detect, simulate_stream, sync_channel};
pub use params::{
    cw_pump_rate, pulsed_excitation_probability, pulsed_reference_power, DetectorModel, Drive, EmitterParams, SimConfig,
};
pub use sim::{blinking_dwell_times, pulse_count, simulate_emissions, simulate_trajectory, DwellTimes};
pub use three_level::{
    analytic_g2, calibrate_blinking, cw_emission_rate, pump_rate_for_tau1, steady_state, ThreeLevelG2,
};
