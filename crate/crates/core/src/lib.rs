//! Attention-guided, L∞-bounded adversarial perturbations that keep a
//! screenshot useful to a GUI agent while hiding the personal information
//! rendered in it.

pub mod baselines;
pub mod error;
pub mod evalharness;
pub mod font;
pub mod generator;
pub mod imageio;
pub mod metrics;
pub mod nn;
pub mod plot;
pub mod privscreen_synth;
pub mod protector;
pub mod qa;
pub mod saliency;
pub mod screen;
pub mod surrogate;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{Image, ImageShape, Tensor};
