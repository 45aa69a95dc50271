use thiserror::Error;

/// Errors produced by the solver library.
///
/// The variants mirror the failure taxonomy used throughout: bad arguments,
/// inconsistent configuration, quadrature/refinement breakdown, and
/// non-converging iterations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical failure: {what}{}", achieved.map(|a| format!(" (achieved estimate {a:e})")).unwrap_or_default())]
    Numerical {
        what: String,
        /// Best estimate reached before giving up, when one exists.
        achieved: Option<f64>,
    },

    #[error("convergence failure: {what} after {iterations} iterations{}", last_ratio.map(|r| format!(" (last ratio {r:e})")).unwrap_or_default())]
    Convergence {
        what: String,
        iterations: usize,
        last_ratio: Option<f64>,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numerical(what: impl Into<String>, achieved: Option<f64>) -> Self {
        Error::Numerical {
            what: what.into(),
            achieved,
        }
    }

    /// Stable machine-readable tag, used by the CLI for exit codes and
    /// structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Configuration(_) => "configuration",
            Error::Numerical { .. } => "numerical-failure",
            Error::Convergence { .. } => "convergence-failure",
            Error::InvalidState(_) => "invalid-state",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
