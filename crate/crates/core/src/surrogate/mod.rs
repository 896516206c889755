//! The differentiable surrogate contract: answer likelihoods, their input
//! gradients, and greedy decoding.

mod registry;
pub mod reference;
mod toy;
mod vocab;

pub use registry::SurrogateRegistry;
pub use toy::{Head, ToyGlyphSurrogate, ToyParams, COLOR_WORDS, COUNT_WORDS, TOY_GLYPH_ID};
pub use vocab::{TokenId, Vocab, EOS_TOKEN, SPACE_TOKEN};

use crate::error::{Error, Result};
use crate::qa::QaPair;
use crate::tensor::{Image, ImageShape};

/// A frozen model scoring answers to questions about an image.
///
/// Implementations hold no mutable state; every method is a pure function of
/// its arguments.
pub trait SurrogateModel: Send + Sync {
    fn id(&self) -> &str;

    fn vocab(&self) -> &Vocab;

    fn image_shape(&self) -> ImageShape;

    /// Hex SHA-256 of the parameters.
    fn parameter_hash(&self) -> String;

    /// Whether [`SurrogateModel::sequence_logprob`] can fill a gradient.
    fn is_differentiable(&self) -> bool {
        true
    }

    /// Log-probabilities over the whole vocabulary for the token after `prefix`.
    fn step_logprobs(&self, x: &Image, question: &str, prefix: &[TokenId]) -> Result<Vec<f64>>;

    /// `Σ_t log p(a_t | a_<t, q, x)`. When `grad` is given, `scale · ∂/∂x` is
    /// added into it (planar layout, same as the image).
    fn sequence_logprob(
        &self,
        x: &Image,
        question: &str,
        answer: &[TokenId],
        grad: Option<(f64, &mut [f64])>,
    ) -> Result<f64>;
}

fn check_image(model: &dyn SurrogateModel, x: &Image) -> Result<()> {
    if x.shape() != model.image_shape() {
        return Err(Error::Shape(format!(
            "model {} expects {}, got {}",
            model.id(),
            model.image_shape(),
            x.shape()
        )));
    }
    x.validate_range()
}

/// `log p(a | q, x)`; only the answer span is scored.
pub fn answer_logprob(model: &dyn SurrogateModel, x: &Image, question: &str, answer: &str) -> Result<f64> {
    check_image(model, x)?;
    let tokens = model.vocab().tokenize(answer)?;
    model.sequence_logprob(x, question, &tokens, None)
}

/// `Σ −log p(a | q, x)` over a QA set.
pub fn nll_qaset(model: &dyn SurrogateModel, x: &Image, qa: &[QaPair]) -> Result<f64> {
    if qa.is_empty() {
        return Err(Error::EmptyQaSet);
    }
    check_image(model, x)?;
    let mut total = 0.0;
    for pair in qa {
        let tokens = model.vocab().tokenize(&pair.answer)?;
        total -= model.sequence_logprob(x, &pair.question, &tokens, None)?;
    }
    Ok(total)
}

/// Per-pair NLLs and, in one accumulated backward pass, the gradient of
/// `Σ weight_i · NLL_i` with respect to the pixels.
pub fn weighted_nll_with_grad(
    model: &dyn SurrogateModel,
    x: &Image,
    qa: &[QaPair],
    weight: impl Fn(usize, f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if qa.is_empty() {
        return Err(Error::EmptyQaSet);
    }
    if !model.is_differentiable() {
        return Err(Error::NotDifferentiable(model.id().to_string()));
    }
    check_image(model, x)?;
    let mut grad = vec![0.0; x.data().len()];
    let mut nlls = Vec::with_capacity(qa.len());
    for (i, pair) in qa.iter().enumerate() {
        let tokens = model.vocab().tokenize(&pair.answer)?;
        let nll = -model.sequence_logprob(x, &pair.question, &tokens, None)?;
        let w = weight(i, nll);
        if w != 0.0 {
            model.sequence_logprob(x, &pair.question, &tokens, Some((-w, &mut grad)))?;
        }
        nlls.push(nll);
    }
    Ok((nlls, grad))
}

/// `NLL(Q)` together with `∂NLL(Q)/∂x`.
pub fn nll_with_grad(model: &dyn SurrogateModel, x: &Image, qa: &[QaPair]) -> Result<(f64, Vec<f64>)> {
    let (nlls, grad) = weighted_nll_with_grad(model, x, qa, |_, _| 1.0)?;
    Ok((nlls.iter().sum(), grad))
}

/// `∂NLL(Q)/∂x` in planar layout.
pub fn input_gradient(model: &dyn SurrogateModel, x: &Image, qa: &[QaPair]) -> Result<Vec<f64>> {
    Ok(nll_with_grad(model, x, qa)?.1)
}

/// Greedy decoding; stops at the end token or after `max_tokens`.
pub fn decode_answer(model: &dyn SurrogateModel, x: &Image, question: &str, max_tokens: usize) -> Result<String> {
    if max_tokens == 0 {
        return Err(Error::InvalidInput("max_tokens must be at least 1".into()));
    }
    check_image(model, x)?;
    let eos = model.vocab().eos();
    let mut out = Vec::new();
    for _ in 0..max_tokens {
        let lp = model.step_logprobs(x, question, &out)?;
        let mut best = 0;
        for (i, v) in lp.iter().enumerate() {
            if *v > lp[best] {
                best = i;
            }
        }
        if Some(best) == eos {
            break;
        }
        out.push(best);
    }
    Ok(model.vocab().detokenize(&out))
}

/// Default decoding budget.
pub const MAX_ANSWER_TOKENS: usize = 32;
