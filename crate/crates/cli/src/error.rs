use std::fmt;

use simpkit_core::Error;

/// Exit status 1 for bad input or configuration, 2 for failures of
/// external systems.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    /// The command ran to completion but some of its work failed.
    Incomplete(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) if e.is_runtime() => 2,
            CliError::Core(_) => 1,
            CliError::Incomplete(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Incomplete(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
