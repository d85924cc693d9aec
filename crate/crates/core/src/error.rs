//! Error taxonomy shared across the crate.
//!
//! The variants map onto process exit codes in the command-line frontend:
//! validation and parse failures exit with 2, capability refusals (a request
//! that is structurally fine but too large for the configured limits) with 3,
//! and non-convergence of an iterative or randomized procedure with 4. Plain
//! I/O errors exit with 1.

use std::fmt::Display;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs violate a documented precondition.
    #[error("validation: {0}")]
    Validation(String),
    /// The request exceeds a configured size or resource cap.
    #[error("capability: {0}")]
    Capability(String),
    /// An iterative procedure exhausted its budget without converging.
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    /// A numerical invariant failed after the computation ran.
    #[error("numerical: {0}")]
    Numerical(String),
    /// A file had the right shape to try but the wrong content.
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Display) -> Self {
        Error::Validation(msg.to_string())
    }

    pub fn capability(msg: impl Display) -> Self {
        Error::Capability(msg.to_string())
    }

    pub fn non_convergence(msg: impl Display) -> Self {
        Error::NonConvergence(msg.to_string())
    }

    pub fn numerical(msg: impl Display) -> Self {
        Error::Numerical(msg.to_string())
    }

    pub fn parse(msg: impl Display) -> Self {
        Error::Parse(msg.to_string())
    }

    /// Process exit code used by the CLI for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) | Error::Parse(_) => 2,
            Error::Capability(_) => 3,
            Error::NonConvergence(_) | Error::Numerical(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
