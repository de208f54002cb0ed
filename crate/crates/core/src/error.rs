use thiserror::Error;

/// Errors raised by the lattice model and its oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node (row {row}, col {col}) is outside a {width}x{depth} grid")]
    Address {
        row: usize,
        col: usize,
        width: usize,
        depth: usize,
    },
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },
    #[error("{what} {value} is out of range {range}")]
    Range {
        what: &'static str,
        value: i64,
        range: String,
    },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("sediment accumulator overflow at time {time}")]
    Arithmetic { time: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
