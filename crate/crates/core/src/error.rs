use thiserror::Error;

/// Errors from tensor construction, graph building, execution, and checkpoints.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape/data mismatch: shape {shape:?} holds {expected} elements, got {actual}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },

    #[error("node `{node}`: {reason}")]
    BuildError { node: String, reason: String },

    #[error("shape mismatch at node `{node}`: {reason}")]
    ShapeMismatch { node: String, reason: String },

    #[error("input `{name}` expects shape {expected:?}, got {actual:?}")]
    BadBinding {
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("input `{name}` was never bound")]
    UnboundInput { name: String },

    #[error("parameter `{name}` missing from parameter set")]
    MissingParam { name: String },

    #[error("backward requested before forward reached node `{node}`")]
    BackwardBeforeForward { node: String },

    #[error("backward requires a scalar loss; node `{node}` has shape {shape:?}")]
    NonScalarLoss { node: String, shape: Vec<usize> },

    #[error("non-finite gradient for parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("optimizer state holds {state} parameters, set holds {params}")]
    OptimizerMismatch { state: usize, params: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
