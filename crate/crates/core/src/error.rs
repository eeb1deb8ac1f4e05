use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("cannot construct {what}: {reason}")]
    Construction { what: &'static str, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimator state error: {0}")]
    State(String),

    #[error("iterates diverged at iteration {iter}")]
    Divergence { iter: usize },

    #[error(
        "Lyapunov descent violated at iteration {iter}: decrease {decrease:.3e} < required {required:.3e}"
    )]
    LyapunovViolation {
        iter: usize,
        decrease: f64,
        required: f64,
    },

    #[error("{path}: parse error at {location}: {msg}")]
    Parse {
        path: PathBuf,
        location: String,
        msg: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn construction(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Construction {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
