use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver failed on block {block}: {reason}")]
    SolverFailure { block: String, reason: String },

    #[error("root finding failed: {0}")]
    NoConvergence(String),

    #[error("no solution in bracket: target {target}, attained range [{min}, {max}]")]
    NoSolution { target: f64, min: f64, max: f64 },

    #[error("{0} is outside every admissible interval")]
    Domain(String),

    #[error("invalid state point: {0}")]
    InvalidPoint(String),

    #[error("partition function vanishes: {0}")]
    DivisionByZero(String),

    #[error("numerical quality: {0}")]
    NumericalQuality(String),

    #[error("cycle infeasible on leg {leg}: {reason}")]
    CycleInfeasible { leg: usize, reason: String },

    #[error("classification error: {0}")]
    Classification(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("internal error: {0}")]
    Internal(String),
}
