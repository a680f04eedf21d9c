use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Construction rejected bad input (asymmetric matrix, dimension
    /// mismatch, indefinite Hessian, and similar).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameter bundle violates a precondition (mu > L, negative step, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An iterative solver failed to reach its residual tolerance.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// Query landed where the metric degenerates (for the quartic, near the
    /// origin the Hessian is singular and dual coordinates are unusable).
    #[error("singular metric at query point: {0}")]
    SingularMetric(String),

    /// Operation is not defined for this objective or form combination.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A trajectory left the representable range.
    #[error("divergence detected at t = {t}")]
    Divergence { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
