use std::path::PathBuf;

/// Everything that can go wrong across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function evaluation produced NaN or infinity where a finite
    /// value is required.
    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    /// The mode search exhausted its iteration budget.
    #[error("mode search did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    /// Newton direction was unusable and gradient ascent also stalled.
    #[error("curvature is not positive definite along the search path and gradient ascent stalled")]
    IndefiniteHessian,

    /// Every trial step, at every halving, left the objective's domain.
    #[error("no step of the mode search stays inside the objective domain")]
    DomainEscape,

    /// Curvature matrix failed its Cholesky factorization.
    #[error("matrix is not positive definite")]
    NonPositiveDefinite,

    /// Data on the boundary of the sample space; the requested quantity
    /// is undefined there.
    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),

    /// Adaptive quadrature exhausted its budget above tolerance.
    #[error("quadrature tolerance not met (estimated relative error {rel_err:.3e})")]
    ToleranceNotMet { rel_err: f64 },

    /// Requested dimension above what the operation supports.
    #[error("dimension {found} exceeds the supported maximum {max}")]
    DimensionTooLarge { found: usize, max: usize },

    /// Not enough records to perform the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Configuration that fails validation before any computation runs.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
