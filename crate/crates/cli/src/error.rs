use thiserror::Error;

/// CLI failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or unparseable configuration.
    #[error("config error: {0}")]
    Parse(String),

    /// Configuration parsed but describes an invalid or infeasible problem.
    #[error("validation error: {0}")]
    Validation(String),

    /// The run started and aborted.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<lindkrotov::Error> for CliError {
    fn from(e: lindkrotov::Error) -> Self {
        if e.is_runtime_abort() {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}
