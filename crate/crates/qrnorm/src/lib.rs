//! Norm-based bounds on asymptotic conversion rates in quantum resource
//! theories.
//!
//! The crate computes tempered monotones, robustness measures, base norms and
//! hypothesis-testing quantities for small systems (up to 81 dimensions) and
//! combines them into certified cost/distillation bounds. All optimisation
//! goes through the in-crate conic solver in [`conic`].
//!
//! Logarithms are base 2 throughout.

pub mod conic;
pub mod dhtest;
pub mod entanglement;
pub mod linalg;
pub mod rates;
pub mod stab;
pub mod states;
pub mod wigner;

pub use linalg::{Operator, C64};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("problem too large for certified solve: {0}")]
    TooLarge(String),
    #[error("solver did not certify a solution: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Base-2 logarithm with the convention log(x) = -inf for x <= 0.
pub fn log2(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x.log2()
    }
}
