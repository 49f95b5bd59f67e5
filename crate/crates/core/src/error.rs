use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: String, found: String },

    #[error("invalid quantization spec: {0}")]
    InvalidSpec(String),

    #[error("NaN passed to quantizer")]
    NanInput,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported activation function `{0}`")]
    UnsupportedActivation(String),

    #[error("input code {code} out of range for a {bits}-bit converter")]
    CodeOutOfRange { code: u32, bits: u32 },

    #[error("noise enabled but no random stream supplied")]
    MissingRng,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("weight noise ratio {0} outside [0, 0.2]")]
    NoiseRatio(f64),

    #[error("forward cache missing or mismatched: {0}")]
    Cache(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: character {ch:?} is not in the corpus alphabet")]
    Alphabet { path: PathBuf, line: usize, ch: char },

    #[error("malformed array file: {0}")]
    Format(String),

    #[error("infeasible hardware parameters: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Self::Dimension { what, expected: expected.to_string(), found: found.to_string() }
    }
}
