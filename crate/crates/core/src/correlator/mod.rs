//! Photon-correlation and lifetime histograms from time-tag streams.

mod analysis;
mod correlate;
mod histogram;
mod lifetime;

pub use analysis::{default_exclusion, fit_g2, normalize_cw, normalize_pulsed, PulsedG2, G2_STARTS};
pub use correlate::{correlate, correlate_multires};
pub use histogram::{Histogram, NormalizedHistogram};
pub use lifetime::{fit_lifetime, lifetime_histogram, lifetime_histogram_shifted};
