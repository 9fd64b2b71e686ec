use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the natural domain of the family.
    #[error("domain error: {0}")]
    Domain(String),

    /// A mean parameter cannot be mapped back to a natural parameter.
    #[error("inversion error: {0}")]
    Inversion(String),

    /// The empirical statistic sits on the boundary of the realizable means.
    #[error("boundary error: {0}")]
    Boundary(String),

    /// A parameter region touches a degenerate part of the family.
    #[error("region error: {0}")]
    Region(String),

    /// The requested mean is not achievable by any member of the family.
    #[error("unreachable mean: {0}")]
    UnreachableMean(String),

    /// A precondition of a bound is violated.
    #[error("validity error: {0}")]
    Validity(String),

    #[error("cover error: {0}")]
    Cover(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    /// An iterative solver failed to converge.
    #[error("solver did not converge: {0}")]
    Convergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validity(msg: impl Into<String>) -> Self {
        Error::Validity(msg.into())
    }
}
