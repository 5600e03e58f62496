use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("entanglement gamma = {0} outside [0, {max}]", max = crate::model::GAMMA_MAX)]
    GammaOutOfRange(f64),

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("equilibrium is symmetric (|q2 - q1| = {0:e}); asymmetry identity undefined")]
    SymmetricInput(f64),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("equilibrium count pattern 3 -> 5 -> 1 not found; observed {observed:?}")]
    PatternNotFound { observed: Vec<usize> },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("solver failure: {0}")]
    Solver(String),
}
