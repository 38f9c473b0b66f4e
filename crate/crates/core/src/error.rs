use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} is not in the multiset")]
    NotCovered { index: u64 },

    #[error("oracle enumeration of {count} items exceeds cap {cap}")]
    OracleTooLarge { count: String, cap: u64 },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("phase exhausted after {0} queries")]
    PhaseExhausted(u64),

    #[error("index {index} is covered by no hint and has no stored value")]
    Uncovered { index: u64 },

    #[error("server returned error code {0:#06x}")]
    Server(u16),

    #[error("duplicate keys: {}", .0.join(", "))]
    DuplicateKeys(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }
}
