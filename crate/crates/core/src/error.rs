use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a named invariant or validation rule.
    #[error("validation failed ({rule}): {detail}")]
    Validation { rule: &'static str, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// The integrator or an optimizer produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated ({condition}): {detail}")]
    Precondition {
        condition: &'static str,
        detail: String,
    },

    #[error("at t = {t_ps} ps: {source}")]
    AtTime {
        t_ps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(rule: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            rule,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation { .. }
            | Error::Parse(_)
            | Error::Dimension(_)
            | Error::Precondition { .. } => true,
            Error::AtTime { source, .. } => source.is_validation(),
            Error::Numerical(_) | Error::Io { .. } => false,
        }
    }
}
