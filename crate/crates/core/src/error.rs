use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("at index {index}: {inner}")]
    AtIndex {
        index: usize,
        inner: Box<Error>,
    },
    #[error("sampler invariant violated at iteration {iteration}: {detail}")]
    Invariant { iteration: usize, detail: String },
    #[error("chain log: {0}")]
    Log(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

impl Error {
    pub(crate) fn at(self, index: usize) -> Error {
        Error::AtIndex {
            index,
            inner: Box::new(self),
        }
    }
}
