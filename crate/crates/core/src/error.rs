use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty comb: no transition survives the strength floor")]
    EmptyComb,

    #[error("grid coverage: {0}")]
    GridCoverage(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the numerical regime (grid too small,
    /// empty comb) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EmptyComb | Error::GridCoverage(_) | Error::OutOfRegime(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
