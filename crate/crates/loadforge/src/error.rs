use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: non-finite value at row {row}, column {col}")]
    NonFinite {
        path: PathBuf,
        line: usize,
        row: usize,
        col: usize,
    },
    #[error("{path}:{line}: gap in time series, missing sample at timestamp {timestamp}")]
    Gap {
        path: PathBuf,
        line: usize,
        timestamp: f64,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] loadforge_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// 2 for usage errors, 3 for unreadable or invalid input, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use loadforge_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::NonFinite { .. }
            | CliError::Gap { .. }
            | CliError::Config(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidInput(_)
                | E::ShapeMismatch { .. }
                | E::NonFinite { .. }
                | E::TooShort { .. }
                | E::NotAMultiple { .. }
                | E::NonStationary
                | E::NotStochastic { .. }
                | E::InvalidSpec(_) => 3,
                E::NnlsNotConverged { .. }
                | E::DegenerateActivations { .. }
                | E::AllComponentsPruned
                | E::NormalizationImpossible { .. }
                | E::ZeroVariance => 4,
            },
        }
    }
}
