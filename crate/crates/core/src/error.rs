use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto exit codes: [`Error::Precondition`] and
/// [`Error::Domain`] become 2, [`Error::NonConvergence`] and
/// [`Error::Numerical`] become 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hypothesis required by the construction does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative procedure did not reach its tolerance.
    #[error("no convergence: {reason} (history: {history:?})")]
    NonConvergence { reason: String, history: Vec<f64> },

    /// A scheme diagnostic tripped (instability, broken comparison, grid too coarse).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration or file format problem.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
