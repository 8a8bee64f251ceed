use std::path::PathBuf;

use thiserror::Error;

use crate::net_model::NodeId;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, layer counts or grids that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// Values that are present but unusable (non-finite weights, negative edge weights, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("node {0} is not part of the network")]
    Lookup(NodeId),

    /// Malformed on-disk content.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Regressions or derivatives that have nothing to work with.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
