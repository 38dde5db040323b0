//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown nonlinearity `{0}`")]
    UnknownNonlinearity(String),

    #[error("invalid nonlinearity parameter: {0}")]
    InvalidParameter(String),

    #[error("adaptive quadrature failed to reach tolerance {tol:e} within budget (interval [{a}, {b}])")]
    QuadratureBudget { a: f64, b: f64, tol: f64 },

    #[error("approximation index {k} too large for quadrature-backed antiderivative (requires k * tol <= 1e-9, tol = {tol:e})")]
    ApproximationIndexTooLarge { k: u32, tol: f64 },

    #[error("degenerate sample grid: repeated or non-finite points")]
    DegenerateGrid,

    #[error("basis dimension {requested} exceeds configured maximum {max}")]
    BasisTooLarge { requested: usize, max: usize },

    #[error("basis dimension must be at least 1")]
    EmptyBasis,

    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("exponent q must lie in (0, 1), got {0}")]
    InvalidSublinearExponent(f64),

    #[error("infeasible lambda {lambda}: certificate requires lambda < lambda_star = {lambda_star}")]
    InfeasibleLambda { lambda: f64, lambda_star: f64 },

    #[error("no root found inside the ball within the iteration budget (best residual {best_residual:e})")]
    SolveFailed { best_residual: f64 },

    #[error("monotone iteration lost pointwise monotonicity at node {node} (violation {violation:e}); basis or quadrature under-resolved")]
    MonotonicityLost { node: usize, violation: f64 },

    #[error("supersolution scan failed: no scalar multiple of the principal eigenfunction dominates one iteration step")]
    SupersolutionScanFailed,

    #[error("schedule must be strictly increasing: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
