use std::fmt;

/// Errors produced by the simulator, its parsers and the analytics layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{source_name}: line {line}, column `{column}`: {message}")]
    Parse {
        source_name: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl fmt::Display) -> Self {
        Error::Input(msg.to_string())
    }

    pub(crate) fn parse(
        source_name: &str,
        line: u64,
        column: impl Into<String>,
        message: impl fmt::Display,
    ) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            column: column.into(),
            message: message.to_string(),
        }
    }

    /// True for errors caused by the caller's input rather than I/O or numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Parse { .. } | Error::Csv(_))
    }
}
