//! Dense-tensor arithmetic with reverse-mode automatic differentiation over
//! static graphs, the neural layers used across the workspace (convolution,
//! group normalization, cross-attention, feature-wise modulation), and an
//! adaptive-moment optimizer.
//!
//! Everything is generic over the scalar type: training runs in f32, gradient
//! checks and geometry oracles in f64. Concrete aliases live at the crate
//! root.

pub mod checkpoint;
pub mod error;
pub mod exec;
pub mod gradcheck;
pub mod graph;
pub mod ops;
pub mod optim;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{CoreError, Result};
pub use exec::Workspace;
pub use graph::{Graph, GraphBuilder, NodeId, Op};
pub use optim::{AdamConfig, AdamState};
pub use params::{init_params, Init, ParamSet};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Training-precision tensor.
pub type Tensor32 = Tensor<f32>;
/// Verification-precision tensor (gradient checks, oracles).
pub type Tensor64 = Tensor<f64>;
pub type ParamSet32 = ParamSet<f32>;
pub type ParamSet64 = ParamSet<f64>;
