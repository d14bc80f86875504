use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: cannot parse {content:?} as a positive number")]
    Parse { line: usize, content: String },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A recursion divisor vanished or a quantity that must be positive was not.
    #[error("degenerate recursion: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
