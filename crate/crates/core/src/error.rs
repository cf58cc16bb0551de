//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the laboratory operations.
///
/// The variants are grouped the way the command-line front end maps them to
/// exit codes: validation problems (bad input, violated preconditions) and
/// resource problems (memory, precision or convergence budgets).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid modification: {0}")]
    Modification(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("capability: {0}")]
    Capability(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("precision budget exceeded: {0}")]
    Precision(String),

    #[error("no convergence: {0}")]
    Convergence(String),
}

impl Error {
    /// True for errors caused by budgets (memory, precision, iteration caps)
    /// rather than by the caller's input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Resource(_) | Error::Precision(_) | Error::Convergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
