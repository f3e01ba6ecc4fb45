use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid base {found:?} at position {position}")]
    InvalidBase { position: usize, found: char },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("site length {site} exceeds sequence length {sequence}")]
    SiteTooLong { site: usize, sequence: usize },

    #[error("value overflows 64 bits for k = {0}")]
    Overflow(usize),

    #[error("k = {0} is too large to enumerate")]
    TooLargeToEnumerate(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("selection in round {round} left no surviving molecules")]
    Depleted { round: usize },

    #[error("insufficient background territory: {available} candidate windows, {required} required")]
    InsufficientBackground { available: usize, required: usize },

    #[error("no usable peaks (all {dropped} windows fall outside contig bounds)")]
    NoUsablePeaks { dropped: usize },

    #[error("all {restarts} optimizer restarts ended at non-finite values")]
    AllRestartsDiverged {
        restarts: usize,
        traces: Vec<crate::fit::RestartTrace>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Short class label used for one-line diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::InFile { source, .. } => source.class(),
            Error::Parse { .. } | Error::EmptySequence | Error::InvalidBase { .. } | Error::LengthMismatch { .. } => {
                "input"
            }
            Error::SiteTooLong { .. }
            | Error::InvalidParameter(_)
            | Error::Overflow(_)
            | Error::TooLargeToEnumerate(_) => "config",
            Error::Depleted { .. }
            | Error::InsufficientBackground { .. }
            | Error::NoUsablePeaks { .. }
            | Error::AllRestartsDiverged { .. } => "runtime",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
