use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the training, inference and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty vocabulary: no token reaches min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("insufficient held-out candidates: requested {requested} pairs but only {available} eligible (instance, slot) pairs exist")]
    InsufficientHeldOut { requested: usize, available: usize },

    #[error("no training instances: every document is shorter than two in-vocabulary tokens")]
    NoInstances,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("unknown evaluation method `{0}`")]
    UnknownMethod(String),

    #[error("query vector is zero after composition")]
    ZeroVector,

    #[error("posterior has no mass")]
    DegeneratePosterior,

    #[error("model in mode {mode} has no {what}")]
    MissingComponent { mode: &'static str, what: &'static str },

    #[error("malformed {what} at {path}:{line}: {reason}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("unsupported model format: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by how the program was invoked rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::UnknownMethod(_) | Error::UnknownToken(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
