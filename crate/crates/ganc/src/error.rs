use std::io;
use std::path::PathBuf;

use ganc_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// An artifact was produced from a different split than the one given.
    #[error("stale artifact {path}: {msg}")]
    Stale { path: PathBuf, msg: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical or contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::Json { .. }
            | Error::Stale { .. } => 2,
            Error::Core(e) => match e {
                CoreError::Argument(_) => 1,
                CoreError::EmptyDataset(_)
                | CoreError::UnknownUser(_)
                | CoreError::UnknownItem(_) => 2,
                CoreError::DegenerateMediocrity(..)
                | CoreError::Divergence(_)
                | CoreError::Infeasible { .. }
                | CoreError::Contract(_)
                | CoreError::UndefinedMetric(_)
                | CoreError::TooLarge(_) => 3,
            },
        }
    }
}
