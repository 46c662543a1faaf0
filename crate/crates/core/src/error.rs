use std::path::PathBuf;

/// A string that is not a valid dot-separated Dewey label.
#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
#[error("invalid dewey label: {0:?}")]
pub struct DeweyParseError(pub String);

/// Errors raised while reading an XML corpus.
#[derive(thiserror::Error, Debug)]
pub enum CorpusError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("no element matches the configured entity labels")]
    EmptyCorpus,
    #[error("invalid index configuration: {0}")]
    Config(String),
}

/// Errors raised while persisting or loading an index directory.
#[derive(thiserror::Error, Debug)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported index format version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("corrupt index file {path} line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

/// Errors raised by query-time operations.
#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("query has no keywords")]
    EmptyQuery,
    #[error("none of the query keywords has a feature term in the index")]
    NoIntent,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
