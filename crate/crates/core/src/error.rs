use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}: {source}")]
    Io {
        source_name: String,
        #[source]
        source: io::Error,
    },

    /// A record in an input file could not be parsed or failed validation.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {id:?} (lines {first_line} and {line}); batch rejected")]
    DuplicateDocument {
        id: String,
        first_line: usize,
        line: usize,
    },

    #[error("hypernym map contains a cycle through {0:?}")]
    HypernymCycle(String),

    #[error("seed vocabulary is empty")]
    EmptySeed,

    #[error("query {0:?} has no terms after normalization")]
    EmptyQuery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index bundle: {0}")]
    Bundle(String),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(source_name: &str, source: io::Error) -> Self {
        Error::Io {
            source_name: source_name.to_string(),
            source,
        }
    }
}
