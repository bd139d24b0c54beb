use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::model::Model;
use super::models::{Envelope, EnvelopeShape, ExpIrf, G2ThreeLevel, Linear, MultiLorentzian, Saturation};
use crate::error::{Error, Result};

/// Builds a model instance. The argument is the component count for models
/// that have one (multi-Lorentzian) and is ignored otherwise.
pub type ModelFactory = Arc<dyn Fn(usize) -> Arc<dyn Model> + Send + Sync>;

/// Lookup table from model id to constructor.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    factories: BTreeMap<String, ModelFactory>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: &str, factory: ModelFactory) -> Result<()> {
        if self.factories.contains_key(id) {
            return Err(Error::DuplicateModel(id.to_string()));
        }
        self.factories.insert(id.to_string(), factory);
        Ok(())
    }

    /// Model with the default component count of one.
    pub fn get(&self, id: &str) -> Result<Arc<dyn Model>> {
        self.get_with(id, 1)
    }

    pub fn get_with(&self, id: &str, components: usize) -> Result<Arc<dyn Model>> {
        self.factories
            .get(id)
            .map(|f| f(components))
            .ok_or_else(|| Error::UnknownModel(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.factories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factories.is_empty()
    }
}

/// Registry holding every built-in model.
pub fn register_models() -> ModelRegistry {
    let mut r = ModelRegistry::empty();
    let builtins: [(&str, ModelFactory); 7] = [
        ("linear", Arc::new(|_| Arc::new(Linear) as Arc<dyn Model>)),
        ("saturation", Arc::new(|_| Arc::new(Saturation) as Arc<dyn Model>)),
        (
            "multi_lorentzian",
            Arc::new(|n| Arc::new(MultiLorentzian::new(n)) as Arc<dyn Model>),
        ),
        ("exp_irf", Arc::new(|_| Arc::new(ExpIrf) as Arc<dyn Model>)),
        ("g2_three_level", Arc::new(|_| Arc::new(G2ThreeLevel) as Arc<dyn Model>)),
        (
            "envelope_exp",
            Arc::new(|_| Arc::new(Envelope(EnvelopeShape::Exponential)) as Arc<dyn Model>),
        ),
        (
            "envelope_gauss",
            Arc::new(|_| Arc::new(Envelope(EnvelopeShape::Gaussian)) as Arc<dyn Model>),
        ),
    ];
    for (id, f) in builtins {
        r.register(id, f).expect("built-in ids are unique");
    }
    r
}

/// Shared process-wide copy of [`register_models`].
pub fn registry() -> &'static ModelRegistry {
    static REGISTRY: OnceLock<ModelRegistry> = OnceLock::new();
    REGISTRY.get_or_init(register_models)
}
