use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The gateway answered with an error body.
    #[error("{code}: {message}")]
    Api { status: u16, code: String, message: String },
    #[error("cannot reach server: {0}")]
    Transport(String),
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn code(&self) -> &str {
        match self {
            CliError::Api { code, .. } => code,
            CliError::Transport(_) => "Transport",
            CliError::Usage(_) => "Usage",
            CliError::Config(_) => "Config",
            CliError::Other(_) => "Error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Api { .. } | CliError::Other(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
