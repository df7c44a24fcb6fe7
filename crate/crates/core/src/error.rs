use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PamError {
    #[error("box of (2R+1)^m = {sites} sites exceeds the capacity limit of {limit} sites")]
    Capacity { sites: String, limit: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{quantity} diverges for d = {d}")]
    Divergent { quantity: &'static str, d: usize },

    #[error("outside the domain of definition: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "eigensolver did not converge after {iterations} matrix-vector products \
         (best Ritz value {best}, residual {residual:e})"
    )]
    NonConvergence { iterations: usize, best: f64, residual: f64, best_vector: Option<Vec<f64>> },

    #[error("degenerate eigenvector: tensor square has zero norm")]
    DegenerateEigenvector,

    #[error("path horizon {horizon} is shorter than the requested time {t}")]
    HorizonTooShort { horizon: f64, t: f64 },

    #[error("integrator step underflow on interval [{start}, {end}]")]
    StepUnderflow { start: f64, end: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },
}

pub type Result<T> = std::result::Result<T, PamError>;
