use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a structural invariant (Hermiticity, PSD, normalization, symmetry).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A tensor power or moment matrix would exceed the configured dimension cap.
    #[error("capacity exceeded: {what} needs dimension {needed}, cap is {cap}")]
    Capacity {
        what: String,
        needed: usize,
        cap: usize,
    },

    /// A scalar argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A logarithm of zero would be taken (for instance `g(k)` at unit trace distance).
    #[error("divergent quantity: {0}")]
    Divergence(String),

    /// Bisection found no sign change of the condition margin on `[0, 1/2]`.
    #[error("no threshold: {0}")]
    NoThreshold(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
