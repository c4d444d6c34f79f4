use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("scale matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("inverse-Wishart requires nu > dim - 1 (got nu = {nu}, dim = {dim})")]
    BadDegreesOfFreedom { nu: f64, dim: usize },
    #[error("block partition must cover every coordinate exactly once: {0}")]
    BadPartition(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}
