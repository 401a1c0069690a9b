use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] fairlag::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    /// 2 for config, parameter and io problems, 3 for schema and data
    /// problems, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        use fairlag::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Parameter(_) | E::Io(_) | E::Json(_) => 2,
                E::Schema(_) | E::Data(_) | E::DegenerateBatch(_) | E::Csv(_) | E::Shape(_) => 3,
                E::Numeric(_) => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
