//! Crate-wide error type for I/O and data-level failures.
//!
//! Contract violations (shape mismatches, backward-without-forward) are
//! programmer errors and panic instead; see the layer modules.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("training diverged in stage {stage} at epoch {epoch} (loss = {loss})")]
    Diverged {
        stage: &'static str,
        epoch: usize,
        loss: f32,
    },

    #[error("checkpoint holds a {found} model, expected {expected}")]
    WrongModelKind { expected: &'static str, found: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
