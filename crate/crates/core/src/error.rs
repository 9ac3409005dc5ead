use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent arguments (dimension mismatch, duplicate points, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A special function or bound was evaluated outside the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// No subset carries volume information.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The threshold search found no certified pair.
    #[error("infeasible: {0}")]
    Infeasible(String),
}
