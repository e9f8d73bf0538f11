use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input: shape mismatch, non-finite data, violated precondition.
    #[error("input error: {0}")]
    Input(String),

    /// Argument lies outside the supported evaluation window.
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    /// An iterative method failed to converge.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    /// Dense linear algebra failure (singular system, failed factorisation).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Problem size exceeds a hard resource bound.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A time step failed; wraps the step index.
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// An I/O failure while writing artifacts.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
