use alloc::string::String;
use thiserror::Error;

/// Errors produced by the approximation pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A neuron with `|omega| = 0` cannot be normalized onto the sphere.
    #[error("neuron {index} has zero input weight")]
    DegenerateNeuron { index: usize },

    /// The integrand evaluated to a non-finite value at a quadrature point.
    #[error("non-finite sample {value} at cell {cell}")]
    NonFiniteSample { cell: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Symmetric factorization hit a non-positive pivot.
    #[error("system is not positive definite (pivot {pivot})")]
    SingularSystem { pivot: usize },

    /// A single-point element has no principal direction.
    #[error("element with a single quadrature point has no principal direction")]
    DegenerateElement,

    #[error("training diverged at iteration {iteration} (learning rate {learning_rate})")]
    Diverged { iteration: usize, learning_rate: f64 },

    #[error("refinement budget exceeded: {cells} cells over cap {cap}")]
    RefinementBudget { cells: usize, cap: usize },

    #[error("unknown target '{0}'")]
    UnknownTarget(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
