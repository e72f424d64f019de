use thiserror::Error;

/// Errors produced by the analytic, optimization and simulation layers.
#[derive(Error, Debug)]
pub enum CascadeError {
    #[error("empty graph")]
    EmptyGraph,

    #[error("degenerate distribution: mean degree is zero")]
    DegenerateDistribution,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid probability for {name}: {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("infeasible target: gamma = {gamma} exceeds s(1) = {s_max}")]
    InfeasibleTarget { gamma: f64, s_max: f64 },

    #[error("target gamma = {gamma} is outside the attainable range ({s_min}, {s_max}): {which}")]
    TargetOutOfRange {
        gamma: f64,
        s_min: f64,
        s_max: f64,
        which: &'static str,
    },

    #[error("monotonicity assumption violated: requires alpha2 > alpha1 (got alpha1 = {alpha1}, alpha2 = {alpha2})")]
    MonotonicityViolated { alpha1: f64, alpha2: f64 },

    #[error("fixed point iteration did not converge after {iterations} iterations (last u = {last}, residual = {residual})")]
    Convergence {
        last: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    #[error("q_gamma = {0} must lie in (0, 1)")]
    QGammaOutOfRange(f64),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("oracle limited to small instances: support size {got} exceeds {limit}")]
    OracleTooLarge { got: usize, limit: usize },

    #[error("target unreachable on grid")]
    TargetUnreachableOnGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CascadeError>;
