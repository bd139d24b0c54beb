//! Virtual Michelson interferometer: interferograms, fringe visibility and
//! coherence-time envelope fits.

mod envelope;
mod interferogram;
mod scan;
mod wiener;

pub use envelope::{
    extract_visibility, fit_envelope, EnvelopeFit, ShapeChoice, VisibilityTrace, MIN_POINTS_PER_FRINGE,
};
pub use interferogram::{
    interferogram_from_spectrum, michelson_lorentzian, read_delay_csv, write_delay_csv, Interferogram,
};
pub use scan::{delay_scan_plan, delay_scan_plan_with_step, DelayScan};
pub use wiener::coherence_function;
