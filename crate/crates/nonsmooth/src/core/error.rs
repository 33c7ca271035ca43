use thiserror::Error;

/// Errors reported by set operations, oracles and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("set is unbounded along the requested direction")]
    UnboundedSet,
    #[error("point is not feasible (violation {0:e})")]
    InfeasiblePoint(f64),
    #[error("matrix does not have full row rank")]
    RankDeficient,
    #[error("non-finite oracle output")]
    NonFinite,
    #[error("regularity violated at iterate {0}")]
    RegularityViolated(usize),
    #[error("singular basis {0:?}")]
    SingularBasis(Vec<usize>),
    #[error("problem reported infeasible at level {0}")]
    ReportedInfeasible(usize),
    #[error("budget of {0} oracle calls exhausted before the stopping test held")]
    BudgetExhausted(u64),
    #[error("best response failed: {0}")]
    BestResponse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, OptError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(OptError::DimensionMismatch { expected, got });
    }
    Ok(())
}
