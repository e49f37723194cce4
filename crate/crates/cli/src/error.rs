use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration (exit status 2).
    #[error("config error: {0}")]
    Config(String),
    /// Numerical or I/O failure while running (exit status 1).
    #[error(transparent)]
    Runtime(#[from] gmcc_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}
