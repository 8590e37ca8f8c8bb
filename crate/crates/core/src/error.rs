use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular linear system")]
    Singular,

    #[error("value iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("KL support violation at index {0}: p > 0 where q = 0")]
    SupportViolation(usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown environment `{0}`")]
    UnknownEnv(String),

    #[error("perturbation {kind} is not supported by {env}")]
    UnsupportedPerturbation { env: String, kind: String },

    #[error("normalizer has not been fitted")]
    UnfittedNormalizer,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
