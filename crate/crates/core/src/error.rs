use thiserror::Error;

use crate::solver::SolveResult;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank-deficient basis: numerical rank {rank} of {dim} vectors")]
    RankDeficient { rank: usize, dim: usize },

    #[error("solver stopped after {} iterations with gap {:e}", .0.iterations, .0.fw_gap)]
    MaxItersExceeded(Box<SolveResult>),

    #[error("objective is not finite; check that labels lie in the loss domain")]
    NonFiniteObjective,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
