use thiserror::Error;

/// Errors raised across model construction, bound evaluation, optimization and sampling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("self-pair ({0}, {0}) is not a valid interaction")]
    SelfPair(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    #[error("invalid influence matrix: {0}")]
    InvalidInfluence(String),

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weight d[{index}] = {value} is negative")]
    NegativeWeight { index: usize, value: f64 },

    #[error("scale factor {0} is below 1 and would break the upper-bound contract")]
    ScaleBelowOne(f64),

    #[error("scan is empty")]
    EmptyScan,

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {last})"
    )]
    NoConvergence { iterations: usize, last: f64 },

    #[error("state space of {states} states exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("exhaustive search over {candidates} scans exceeds the budget of {limit}")]
    BudgetExceeded { candidates: u128, limit: u128 },

    #[error("internal consistency failure: incremental {incremental} vs recomputed {recomputed}")]
    Inconsistent { incremental: f64, recomputed: f64 },

    #[error("at least 2 replicates are required, got {0}")]
    TooFewReplicates(usize),

    #[error("invalid start state: {0}")]
    InvalidStart(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parameter estimate became non-finite at gradient step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
