use std::fmt;
use std::process::ExitCode;

use dogfuse::FusionError;

/// Exit status of a CLI run: 0 success, 1 internal error, 2 user input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Internal = 1,
    Usage = 2,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            status: Status::Usage,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            status: Status::Internal,
            error: error.into(),
        }
    }

    /// Failures while producing output files.
    pub fn output(error: impl Into<anyhow::Error>, what: impl fmt::Display) -> Self {
        Self::internal(error.into().context(format!("cannot write {what}")))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::InvalidParameter(_)
            | FusionError::InvalidInput(_)
            | FusionError::TooSmall { .. }
            | FusionError::DimensionMismatch(_)
            | FusionError::Decode { .. } => Self::usage(e),
            FusionError::Encode { .. } | FusionError::Io(_) => Self::internal(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
