//! Closed-form emitter photophysics.

mod rates;
mod spectrum;

pub use rates::{
    coherence_from_times, fourier_limited_linewidth, indistinguishability, pulsed_source_to_detector_efficiency,
    saturation_intensity, source_to_detector_efficiency, t2_star_from_t2, CoherenceRates, SaturationModel,
};
#[allow(unused_imports)]
pub(crate) use spectrum::check_strictly_increasing;
pub use spectrum::{
    apply_filter, dw_factor, evaluate_spectrum, linear_grid, ComponentKind, FilterSpec, LorentzianComponent,
    ParametricSpectrum, SampledSpectrum, Spectrum,
};
