use thiserror::Error;

use crate::conic::SolveStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("effective channel is zero at sample {sample} of area {area}")]
    NoLink { area: usize, sample: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{context}: subproblem solve ended with status {status:?}")]
    Solver {
        context: String,
        status: SolveStatus,
    },

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
