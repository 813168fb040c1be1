use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("channel {0} has no valid values")]
    UnusableChannel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("slice [{start}, {end}) does not intersect the log")]
    EmptySlice { start: String, end: String },

    #[error("decomposition error: segment of {length} samples supports at most level {max_level}, requested {requested}")]
    Decomposition {
        length: usize,
        requested: usize,
        max_level: usize,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for bad input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn(_)
            | Error::Format(_)
            | Error::UnusableChannel(_)
            | Error::Parse(_)
            | Error::EmptySlice { .. }
            | Error::Decomposition { .. }
            | Error::Shape(_)
            | Error::Config(_)
            | Error::Validation(_)
            | Error::CorruptArtifact(_) => 1,
            Error::File { source, .. } => source.exit_code(),
            Error::InsufficientData(_)
            | Error::Training(_)
            | Error::UndefinedMetric(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
