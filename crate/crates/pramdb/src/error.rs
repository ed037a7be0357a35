use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("write conflict in round {round} at address {addr}")]
    Conflict { round: u64, addr: usize },
    #[error("out-of-bounds access: index {index}, length {len}")]
    Bounds { index: usize, len: usize },
    #[error("parameter fault: {0}")]
    Param(String),
    #[error("word overflow: {0}")]
    Overflow(String),
    #[error("setting fault: {0}")]
    Setting(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("schema fault: {0}")]
    Schema(String),
    #[error("parse error at {loc}: {msg}")]
    Parse { loc: String, msg: String },
    #[error("unsafe query: {0}")]
    Unsafe(String),
    #[error("load fault: {0}")]
    Load(String),
    #[error("size assertion failed: {0}")]
    Assertion(String),
    #[error("invalid decomposition: {0}")]
    Decomposition(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}
