use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failure to load a transit feed. `line` is the 1-based line in the CSV file
/// (the header is line 1); 0 means the entity did not come from a file row.
#[derive(Debug, Error)]
pub enum FeedError {
    #[error("missing feed file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}:{line}: unknown reference `{key}`")]
    Reference { file: String, line: usize, key: String },
    #[error("{file}:{line}: stop times of trip `{trip_id}` are not time-ordered")]
    Order { file: String, line: usize, trip_id: String },
    #[error("{file}:{line}: duplicate key `{key}`")]
    Duplicate { file: String, line: usize, key: String },
    #[error("{file}:{line}: {message}")]
    InvalidValue { file: String, line: usize, message: String },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}
