use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] stfem::Error),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("{0} bound(s) violated")]
    Violation(usize),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use stfem::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Violation(_) => EXIT_VIOLATION,
            CliError::Core(e) => match e {
                E::VerificationFailed { .. }
                | E::EigenBoundNotCertified { .. }
                | E::NoConvergence { .. }
                | E::Singular
                | E::AssemblyIntegrity { .. }
                | E::Interval(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            },
        }
    }
}
