use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("{0} is undefined for an empty instance list")]
    EmptyInput(&'static str),

    #[error("environment variable `{0}` holding the endpoint credential is not set")]
    MissingCredential(String),

    #[error("stage {stage} failed after {attempts} attempt(s): {message}")]
    Stage {
        stage: usize,
        attempts: u32,
        message: String,
    },

    #[error("backend `{backend}` failed for {} instance(s): {}", failed.len(), failed.join(", "))]
    Backend {
        backend: String,
        failed: Vec<String>,
    },

    #[error("backend output is missing for {} id(s): {}", .0.len(), .0.join(", "))]
    MissingOutputs(Vec<String>),

    #[error("runs were scored on different test sets: `{0}` vs `{1}`")]
    TestSetMismatch(String, String),

    #[error("endpoint error: {0}")]
    Endpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of external systems (endpoints, backends) rather
    /// than bad input or configuration.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::Stage { .. } | Error::Backend { .. } | Error::Endpoint(_)
        )
    }
}
