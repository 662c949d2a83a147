use std::io;

use thiserror::Error;

/// Errors produced by the kinetic toolkit.
#[derive(Debug, Error)]
pub enum FpaError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("coercivity fails for these parameters: min Hessian eigenvalue {lambda:.6e} at |v| = {at:.4}")]
    CoercivityFails { lambda: f64, at: f64 },

    #[error("velocity truncation too small: f_inf(Vmax)/max f_inf = {tail_ratio:e}, tail mass {tail_mass:e}")]
    Truncation { tail_ratio: f64, tail_mass: f64 },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("degenerate density at x-cell {cell}: averaged density {value:e} below floor")]
    DegenerateDensity { cell: usize, value: f64 },

    #[error("isolated agent {agent}: communication strength {value:e} below floor")]
    IsolatedAgent { agent: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },

    #[error("tridiagonal solve broke down at x-cell {cell}, row {row}")]
    Tridiagonal { cell: usize, row: usize },

    #[error("CFL violation: |v|max dt/dx = {courant:.4} > 1")]
    Cfl { courant: f64 },

    #[error("non-finite value at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("epsilon {epsilon} too large: modified functional not equivalent to Fisher information at record {record}; try a smaller epsilon")]
    EpsilonTooLarge { epsilon: f64, record: usize },

    #[error("insufficient samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FpaError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FpaError {
    FpaError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
