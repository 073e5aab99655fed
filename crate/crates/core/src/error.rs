use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative procedure did not reach its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    /// The shooting predicate was not monotone over the eigenvalue bracket.
    #[error("bracket failure: {0}")]
    Bracket(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
