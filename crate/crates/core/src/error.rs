use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    /// A convex subproblem has no strictly feasible point. `constraints` lists the
    /// constraint families that were binding when feasibility search stopped.
    #[error("{stage} subproblem infeasible (binding: {constraints:?})")]
    Infeasible { stage: String, constraints: Vec<String> },
    #[error("{stage}: numerical failure in conic solver: {reason}")]
    NumericalFailure { stage: String, reason: String },
    #[error("no antenna placement satisfying the minimum spacing was found")]
    SpacingInfeasible,
    #[error("no discrete phase configuration satisfies the secondary QoS constraint")]
    NoFeasiblePhase,
}

pub type Result<T> = core::result::Result<T, Error>;
