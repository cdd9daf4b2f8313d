use thiserror::Error;

use crate::expr::ParseError;

/// An elementary function or operator was evaluated outside its domain.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain error: {what} in `{subtree}`")]
pub struct DomainError {
    pub what: String,
    /// The offending subtree, printed in the DSL.
    pub subtree: String,
}

impl DomainError {
    pub fn new(what: &str, subtree: String) -> Self {
        Self {
            what: what.to_string(),
            subtree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    /// A matrix that must be invertible had a pivot below the degeneracy threshold.
    #[error("degenerate {what} at {point:?} (pivot {pivot:e})")]
    Degenerate { what: String, point: Vec<f64>, pivot: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("integration failed at tau={tau}: {reason}")]
    Integration { tau: f64, reason: String },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
