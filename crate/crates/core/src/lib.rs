//! Single-photon emitter simulation and analysis.
//!
//! The crate covers the whole loop: closed-form photophysics ([`photophys`]),
//! Monte Carlo time-tag generation ([`emitter`]), correlation histograms
//! ([`correlator`]), a virtual Michelson interferometer ([`interferometry`])
//! and the least-squares engine they all share ([`fit`]).
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlator;
pub mod emitter;
pub mod error;
pub mod fit;
pub mod interferometry;
pub mod photophys;
pub mod presets;
pub mod spectral_fit;
pub mod tags;
pub mod units;

pub use error::{Error, Result};
