use std::fmt;

use robust_design::Error as CoreError;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(CoreError),
    /// Writing an artifact failed.
    Output(std::io::Error),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "data" => 3,
            _ => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Output(_) => "data",
            CliError::Core(e) => match e {
                CoreError::InvalidConfig(_)
                | CoreError::InvalidGoal(_)
                | CoreError::Schema(_)
                | CoreError::FoldCount { .. }
                | CoreError::PoolTooLarge { .. } => "config",
                CoreError::Io(_)
                | CoreError::Csv(_)
                | CoreError::MissingColumn(_)
                | CoreError::DuplicateColumn(_)
                | CoreError::MissingValue { .. }
                | CoreError::NonNumeric { .. }
                | CoreError::NoRows
                | CoreError::UnknownColumn(_)
                | CoreError::InsufficientObservations { .. } => "data",
                _ => "numeric",
            },
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            status: self.status(),
            kind: self.kind(),
            message: self.to_string(),
        }
    }
}

/// Machine-readable failure report.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: i32,
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
