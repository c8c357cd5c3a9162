use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;
use crate::descriptor::format::FormatError;

/// Errors raised by the geometry, descriptor, completion and data generation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("requested {k} neighbours from a cloud of {len} points")]
    TooFewPoints { k: usize, len: usize },
    #[error("cell ({i}, {j}) outside a {resolution}x{resolution} grid")]
    CellOutOfRange { i: usize, j: usize, resolution: usize },
    #[error("could not place {planes} random planes with pairwise angles >= 30 degrees after {rounds} rounds")]
    PlaneSampling { planes: usize, rounds: usize },
    #[error("backend failed on query {query}: {source}")]
    Backend {
        query: usize,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
