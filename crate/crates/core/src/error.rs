//! Error type shared by all kernel modules.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("basis needs at least one mode")]
    EmptyBasis,
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("coarsening factor {factor} does not divide {n_steps} steps")]
    CoarsenFactor { factor: usize, n_steps: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("expected {expected} noise increments, got {got}")]
    IncrementCount { expected: usize, got: usize },
    #[error("covariance eigenvalues must be finite and nonnegative")]
    InvalidCovariance,
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("path step size {got} does not match plan step size {expected}")]
    StepSizeMismatch { expected: f64, got: f64 },
}
