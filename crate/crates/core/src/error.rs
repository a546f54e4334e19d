use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or missing configuration. `key` names the offending config path or table row.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// Inputs whose shapes disagree (e.g. bin sets that do not line up).
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// Input data referring to unknown entities or violating invariants.
    #[error("data error: {0}")]
    Data(String),

    #[error("routing error: no path from link {from} to link {to}")]
    Unroutable { from: u32, to: u32 },

    #[error("plan error: {0}")]
    Plan(String),

    #[error("zone {zone}: {source}")]
    Zone {
        zone: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems map to exit code 2, everything else to 1.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } => true,
            Error::Zone { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
