use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A result exists but violates a physical invariant (e.g. degree of polarization > 1).
    #[error("unphysical result: {0}")]
    Unphysical(String),
    #[error("singular or ill-conditioned system (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("parameters not identifiable: {0}")]
    NonIdentifiable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
