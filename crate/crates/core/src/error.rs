use thiserror::Error;

use crate::simulator::StepReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("no convergence at step {step}: {report}")]
    NonConvergence { step: usize, report: StepReport },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short tag, used by the command line for machine-parsable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Shape(_) => "shape-mismatch",
            Error::OutOfRange(_) => "out-of-range",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::LinearSolve(_) => "linear-solve",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            msg: msg.into(),
        }
    }
}
