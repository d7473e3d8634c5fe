use thiserror::Error;

/// Errors produced by the nonlocal calculus routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integral does not converge: {0}")]
    NonConvergent(String),

    #[error("quadrature budget of {budget} panels exhausted on [{a}, {b}]")]
    QuadratureBudget { a: f64, b: f64, budget: usize },

    #[error("kernel window around t = {t} leaves the data domain [{a}, {b}]")]
    OutsideDomain { t: f64, a: f64, b: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("spectrum vanishes at xi = {0}")]
    SpectralZero(f64),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
