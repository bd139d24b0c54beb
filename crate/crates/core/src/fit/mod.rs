//! Levenberg-Marquardt fitting and the model registry.

mod lm;
mod model;
pub mod models;
mod registry;
mod transform;

pub use lm::{lm_minimize, lm_multistart, FitProblem, FitResult};
pub use model::{model_gradient, numeric_gradient, Model, ParamSpec, FD_RELATIVE_STEP};
pub use models::{erfcx, Envelope, EnvelopeShape, ExpIrf, G2ThreeLevel, Linear, MultiLorentzian, Saturation};
pub use registry::{register_models, registry, ModelFactory, ModelRegistry};
pub use transform::Bounds;
