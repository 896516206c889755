//! Closed-form models with known likelihoods, for checking code that consumes
//! a [`SurrogateModel`].

use super::{SurrogateModel, TokenId, Vocab};
use crate::error::{Error, Result};
use crate::tensor::{hex_digest, Image, ImageShape};

/// Uniform over `V` tokens at every step, whatever the image.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocab,
    shape: ImageShape,
}

impl UniformModel {
    /// Vocabulary `t0 … t{V-1}`.
    pub fn new(vocab_size: usize, shape: ImageShape) -> Self {
        let tokens = (0..vocab_size).map(|i| format!("t{i}")).collect();
        Self {
            vocab: Vocab::new(tokens).expect("generated tokens are distinct"),
            shape,
        }
    }
}

impl SurrogateModel for UniformModel {
    fn id(&self) -> &str {
        "uniform"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn image_shape(&self) -> ImageShape {
        self.shape
    }

    fn parameter_hash(&self) -> String {
        hex_digest(&(self.vocab.len() as u64).to_le_bytes())
    }

    fn step_logprobs(&self, _x: &Image, _q: &str, _prefix: &[TokenId]) -> Result<Vec<f64>> {
        let v = self.vocab.len();
        Ok(vec![-(v as f64).ln(); v])
    }

    fn sequence_logprob(
        &self,
        _x: &Image,
        _q: &str,
        answer: &[TokenId],
        _grad: Option<(f64, &mut [f64])>,
    ) -> Result<f64> {
        Ok(-(answer.len() as f64) * (self.vocab.len() as f64).ln())
    }
}

/// Puts all probability on the next token of a fixed answer.
#[derive(Debug, Clone)]
pub struct PerfectModel {
    vocab: Vocab,
    shape: ImageShape,
    answer: Vec<TokenId>,
}

impl PerfectModel {
    pub fn new(vocab: Vocab, shape: ImageShape, answer: &str) -> Result<Self> {
        let answer = vocab.tokenize(answer)?;
        if answer.is_empty() {
            return Err(Error::InvalidInput("answer must be nonempty".into()));
        }
        Ok(Self { vocab, shape, answer })
    }
}

impl SurrogateModel for PerfectModel {
    fn id(&self) -> &str {
        "perfect"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn image_shape(&self) -> ImageShape {
        self.shape
    }

    fn parameter_hash(&self) -> String {
        let bytes: Vec<u8> = self.answer.iter().flat_map(|t| (*t as u64).to_le_bytes()).collect();
        hex_digest(&bytes)
    }

    fn step_logprobs(&self, _x: &Image, _q: &str, prefix: &[TokenId]) -> Result<Vec<f64>> {
        let mut lp = vec![f64::NEG_INFINITY; self.vocab.len()];
        let next = self
            .answer
            .get(prefix.len())
            .copied()
            .or(self.vocab.eos())
            .unwrap_or(self.answer[0]);
        lp[next] = 0.0;
        Ok(lp)
    }

    fn sequence_logprob(
        &self,
        _x: &Image,
        _q: &str,
        answer: &[TokenId],
        _grad: Option<(f64, &mut [f64])>,
    ) -> Result<f64> {
        let all_match = answer.len() <= self.answer.len()
            && answer.iter().zip(&self.answer).all(|(a, b)| a == b);
        Ok(if all_match { 0.0 } else { f64::NEG_INFINITY })
    }
}

/// Returns the same NLL for every answer, set by the caller: `logprob` per pair.
#[derive(Debug, Clone)]
pub struct FixedLogprobModel {
    vocab: Vocab,
    shape: ImageShape,
    /// Log-probability returned for an answer token sequence, keyed by the first token.
    per_first_token: Vec<f64>,
}

impl FixedLogprobModel {
    pub fn new(vocab: Vocab, shape: ImageShape, per_first_token: Vec<f64>) -> Result<Self> {
        if per_first_token.len() != vocab.len() {
            return Err(Error::Shape("one log-probability per token".into()));
        }
        Ok(Self {
            vocab,
            shape,
            per_first_token,
        })
    }
}

impl SurrogateModel for FixedLogprobModel {
    fn id(&self) -> &str {
        "fixed-logprob"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn image_shape(&self) -> ImageShape {
        self.shape
    }

    fn parameter_hash(&self) -> String {
        let bytes: Vec<u8> = self.per_first_token.iter().flat_map(|v| v.to_le_bytes()).collect();
        hex_digest(&bytes)
    }

    fn step_logprobs(&self, _x: &Image, _q: &str, _prefix: &[TokenId]) -> Result<Vec<f64>> {
        let v = self.vocab.len();
        Ok(vec![-(v as f64).ln(); v])
    }

    fn sequence_logprob(
        &self,
        _x: &Image,
        _q: &str,
        answer: &[TokenId],
        _grad: Option<(f64, &mut [f64])>,
    ) -> Result<f64> {
        let first = *answer
            .first()
            .ok_or_else(|| Error::InvalidInput("empty answer".into()))?;
        Ok(self.per_first_token[first])
    }
}
