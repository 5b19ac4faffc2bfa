use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate record for model {model_id:?}, epoch {epoch}, image {image_id:?}")]
    Duplicate {
        line: u64,
        model_id: String,
        epoch: u32,
        image_id: String,
    },

    #[error("incomplete decision grid: missing model {model_id:?}, epoch {epoch}, image {image_id:?}")]
    Incomplete {
        model_id: String,
        epoch: u32,
        image_id: String,
    },

    #[error("inconsistent log: {0}")]
    Inconsistent(String),

    #[error("unknown {kind} {name:?}")]
    Lookup { kind: &'static str, name: String },

    #[error("corrupt cache: {0}")]
    CorruptCache(String),

    /// Both marginals are 0 or both are 1, so expected agreement is 1 and
    /// kappa has no value. The observed agreement is still reported.
    #[error("kappa undefined (expected agreement is 1, observed agreement {c_obs})")]
    UndefinedKappa { c_obs: f64 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("degenerate feature vector for image {0:?}")]
    DegenerateFeature(String),

    #[error("tolerance {tolerance} invalid for {models} models (need 2t < M)")]
    InvalidTolerance { tolerance: u32, models: usize },

    #[error("cube has no stored predictions; {0} needs predicted labels")]
    MissingPredictions(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not enough images: need {needed} {kind} images, have {available} (short by {})", needed - available)]
    Capacity {
        kind: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("trial {got} submitted out of order (expected {expected})")]
    Sequencing { expected: usize, got: usize },

    #[error("trial {0} already answered")]
    DuplicateResponse(usize),

    #[error("session is complete")]
    SessionComplete,

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn lookup(kind: &'static str, name: impl ToString) -> Self {
        Error::Lookup {
            kind,
            name: name.to_string(),
        }
    }
}
