use std::path::PathBuf;

use thiserror::Error;

use crate::lattice::Vertex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dual circuit: {0}")]
    InvalidCircuit(String),

    #[error("vertex {0} is not in the domain")]
    OutsideDomain(Vertex),

    #[error("vertex frozen: {0}")]
    VertexFrozen(Vertex),

    #[error("window unreachable at this scale: {0}")]
    WindowUnreachable(String),

    #[error("box radius {radius} exceeds the memory cap {cap}")]
    MemoryCap { radius: u64, cap: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidCircuit(_)
                | Error::OutsideDomain(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
