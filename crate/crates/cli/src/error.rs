use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Output { .. } => 3,
            CliError::Degenerate(_) => 4,
        }
    }
}

impl From<eclose::Error> for CliError {
    fn from(e: eclose::Error) -> Self {
        use eclose::Error as E;
        match e {
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::DegenerateVariance(_) => CliError::Degenerate(e.to_string()),
            E::DimensionMismatch { .. } | E::InsufficientSample(_) | E::Overflow(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
