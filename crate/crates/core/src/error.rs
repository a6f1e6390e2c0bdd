use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed counter: {0}")]
    MalformedCounter(String),
    #[error("invalid coordinate: {0}")]
    Coordinate(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
    #[error("invalid Bernoulli vector: {0}")]
    Bernoulli(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid generator: {0}")]
    Generator(String),
    #[error("invalid Turing machine: {0}")]
    Machine(String),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
