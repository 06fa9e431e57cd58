use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid score at {set}[{index}]: {value}")]
    InvalidScore {
        set: &'static str,
        index: usize,
        value: String,
    },
    #[error("{0} sample must contain at least one score")]
    EmptySample(&'static str),
    #[error("strict mode forbids tied scores ({0})")]
    Ties(String),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition unmet: {0}")]
    Precondition(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
