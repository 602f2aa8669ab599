use thiserror::Error;

/// Why a subcommand failed; each kind maps to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] pharmwatch::Error),
    #[error("data error: {0}")]
    DataMessage(String),
    /// An upstream artifact or a human annotation step is missing.
    #[error("{0}")]
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) | CliError::DataMessage(_) => 2,
            CliError::Gate(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::DataMessage(e.to_string())
    }
}
