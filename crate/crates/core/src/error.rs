//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, field evaluation and the solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid static configuration (grid sizes, viscosity family, exponents, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Evaluation requested outside the admissible domain (negative shear rate,
    /// point outside the strip, interface leaving the strip, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A solver block could not be factorized for the given parameters.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Initial data violate the pointwise compatibility conditions.
    #[error("incompatible data: {0}")]
    Incompatible(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
