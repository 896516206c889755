use std::collections::BTreeMap;
use std::sync::Arc;

use super::{SurrogateModel, ToyGlyphSurrogate};
use crate::error::{Error, Result};
use crate::tensor::ImageShape;

/// Surrogates by string id. Only models exposing input gradients are accepted.
#[derive(Default, Clone)]
pub struct SurrogateRegistry {
    models: BTreeMap<String, Arc<dyn SurrogateModel>>,
}

impl SurrogateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the toy glyph reader for `shape`.
    pub fn with_defaults(shape: ImageShape) -> Result<Self> {
        let mut r = Self::new();
        r.register(Arc::new(ToyGlyphSurrogate::new(shape)?))?;
        Ok(r)
    }

    pub fn register(&mut self, model: Arc<dyn SurrogateModel>) -> Result<()> {
        if !model.is_differentiable() {
            return Err(Error::NotDifferentiable(model.id().to_string()));
        }
        self.models.insert(model.id().to_string(), model);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn SurrogateModel>> {
        self.models
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSurrogate(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.models.keys().map(String::as_str).collect()
    }
}
