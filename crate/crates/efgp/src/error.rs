//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, EfgpError>;

#[derive(Debug, Error)]
pub enum EfgpError {
    /// Invalid parameter at construction or call time.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A stated theorem/operation hypothesis does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A resource guard (memory or operation-count budget) was exceeded.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// Input data failed validation (NaN, wrong shape, out of domain).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Shape/length mismatch between arrays.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Iterative solve failed to reach the requested residual.
    #[error("conjugate gradients did not converge: residual {residual:.3e} after {iterations} iterations (target {target:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
        /// Relative residual after each iteration.
        history: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Corrupt or incompatible serialized model.
    #[error("model file error: {0}")]
    ModelFormat(String),
}
