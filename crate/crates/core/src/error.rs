//! Error types shared across the solvers and the simulation engine.

use thiserror::Error;

/// Validation failures on market-model inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    /// Venue weights must lie in (0, 1] and sum to one.
    #[error("venue weights are not a simplex: {0}")]
    WeightsNotSimplex(String),
    /// Temporary impact must be strictly positive, permanent impact nonnegative.
    #[error("nonpositive impact coefficient: {0}")]
    NonpositiveImpact(String),
    #[error("expected {expected} per-venue rates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Numerical failures raised by the analytic and grid-based solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    /// The tangent branch of the closed form blows up inside the horizon.
    #[error("tangent branch escapes to infinity at t = {escape_time:.6} inside the horizon")]
    TanSingularity { escape_time: f64 },
    /// The ODE oracle's per-step error estimate exceeded its tolerance.
    #[error(
        "ODE oracle local error estimate {estimate:.3e} exceeds {tolerance:.3e}; refine the grid"
    )]
    StepTooLarge { estimate: f64, tolerance: f64 },
    #[error("quadrature did not stabilize within {max_subintervals} subintervals")]
    QuadratureNotConverged { max_subintervals: usize },
    /// Finite-difference solution left the a-priori bound on |h|.
    #[error("finite-difference scheme unstable: max |h| = {max_abs:.3e} exceeds {bound:.3e}")]
    UnstableScheme { max_abs: f64, bound: f64 },
    /// The risk-neutral closed forms need 2K > eta_per.
    #[error("terminal penalty too small: 2K must exceed the permanent impact coefficient")]
    InfeasiblePenalty,
    #[error("event probability {p:.3e} exceeds 1; reduce dt")]
    ProbabilityOverflow { p: f64 },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Failures of the ensemble statistics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample variance is zero; skewness and kurtosis are undefined")]
    DegenerateSample,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}
