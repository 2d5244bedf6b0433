//! Crate-wide error type.
//!
//! All public operations return [`Result`]. Variants separate input problems
//! (`Parse`, `Validation`), store-level collisions (`Conflict`), lookups that
//! found nothing (`NotFound`), and numerical failures (`Computation`) so that
//! callers can decide which are fatal for a batch run.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {detail}")]
    Parse { context: String, detail: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("computation failed: {0}")]
    Computation(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, detail: impl std::fmt::Display) -> Self {
        Error::Parse {
            context: context.into(),
            detail: detail.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
