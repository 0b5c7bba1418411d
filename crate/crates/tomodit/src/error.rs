use std::fmt;

use tomodit_core::Error as CoreError;

/// Process exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 2,
    BadInput = 3,
    Protocol = 4,
    Numerical = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Usage,
            message: message.into(),
        }
    }

    pub fn bad_input(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::BadInput,
            message: message.into(),
        }
    }

    pub fn protocol(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Protocol,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            status: ExitStatus::Numerical,
            message: message.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.status as i32
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let status = match e {
            CoreError::DimensionTooSmall { .. } | CoreError::ZeroShots => ExitStatus::Usage,
            CoreError::Parity { .. } => ExitStatus::Protocol,
            CoreError::IllConditioned(_)
            | CoreError::RankDeficient { .. }
            | CoreError::PortMap { .. } => ExitStatus::Numerical,
            _ => ExitStatus::BadInput,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::bad_input(format!("I/O error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::bad_input(format!("malformed JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::bad_input(format!("CSV error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
