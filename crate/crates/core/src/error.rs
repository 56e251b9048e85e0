use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown line id {0}")]
    UnknownLine(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("integrality residual {residual:.3e} on variable {name}")]
    Integrality { name: String, residual: f64 },

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("scenario set fingerprint mismatch ({0} vs {1})")]
    FingerprintMismatch(String, String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn in_scenario(self, scenario: usize) -> Self {
        Error::Scenario {
            scenario,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
