use std::path::PathBuf;

use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prime capacity exhausted: {0}")]
    PrimeCapacity(String),

    #[error("path length {got} does not match dictionary hop order {expected}")]
    PathLength { expected: usize, got: usize },

    #[error("cannot decode value {value}: factor {factor} is not mapped to any path")]
    UnknownFactor { value: BigUint, factor: BigUint },

    #[error("cannot decode value {0}: values below 2 carry no paths")]
    NotDecodable(BigUint),

    #[error("prime {prime} is already bound to a different path")]
    PrimeConflict { prime: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{0}: no triples found")]
    EmptyGraph(PathBuf),

    #[error("node `{0}` has no type label")]
    MissingType(String),

    #[error("cell overflow at k={k}, ({row}, {col})")]
    Overflow { k: usize, row: usize, col: usize },

    #[error("index {index} out of range for {size} nodes")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("lossless expansion stopped at k={k}: {msg}")]
    Resource { k: usize, msg: String },

    #[error("all paths were filtered out of the vocabulary")]
    EmptyVocabulary,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
