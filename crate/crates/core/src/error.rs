use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid construction parameters (grid extents, packet placement, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with inputs violating its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// A regularization feature is narrower than the grid can represent.
    #[error("under-resolved {what}: needs at least {required_n} samples along this axis")]
    UnderResolved { what: String, required_n: usize },

    /// An oscillatory quadrature would alias.
    #[error("resolution error: {what}; at least {required_samples} samples required")]
    Resolution {
        what: String,
        required_samples: usize,
    },

    /// Non-finite values appeared during time stepping.
    #[error("numerical failure at step {step}: {reason}")]
    Numerical { step: usize, reason: String },

    /// A singular evaluation point (e.g. the fundamental solution at t = 0).
    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
