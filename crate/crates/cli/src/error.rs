use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(#[from] pseudomode::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(e) => match e {
                // invalid inputs that slipped past config validation
                pseudomode::Error::InvalidArgument(_) | pseudomode::Error::Parse { .. } => 2,
                _ => 3,
            },
            CliError::Output(_) => 1,
        }
    }
}
