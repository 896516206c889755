use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("token {token:?} is not in the model vocabulary")]
    OutOfVocabulary { token: String },

    #[error("question not understood by {model}: {question:?}")]
    UnsupportedQuestion { model: String, question: String },

    #[error("empty QA set: the negative log-likelihood of nothing is ambiguous")]
    EmptyQaSet,

    #[error("model {0} does not expose input gradients")]
    NotDifferentiable(String),

    #[error("unknown surrogate id {0:?}")]
    UnknownSurrogate(String),

    #[error("attention pyramid missing or mismatched: {0}; call build_pyramid with the generator's level shapes")]
    MissingPyramid(String),

    #[error("non-finite loss at optimizer step {step}")]
    NonFiniteLoss { step: usize },

    #[error("format version mismatch in {what}: expected {expected}, found {found}")]
    VersionMismatch {
        what: String,
        expected: u32,
        found: u32,
    },

    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error at {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
