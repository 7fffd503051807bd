//! Minimal 1D-convolutional network engine with hand-written backprop.

mod adam;
mod gemm;
mod layers;
mod loss;
mod network;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use layers::{power_normalize, LayerSpec};
pub use loss::{bce_loss, categorical_ce_loss, LossKind};
pub use network::{ForwardRecord, Gradients, Network};
pub use tensor::Tensor;

/// Whether batch normalization uses batch statistics or running estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("layer {layer}: expected {expected} input channels, got {actual}")]
    ShapeMismatch {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    #[error("backward called without a matching forward record")]
    MissingRecord,
    #[error("power normalization of an all-zero block")]
    DegenerateInput,
    #[error("invalid layer specification: {0}")]
    InvalidSpec(&'static str),
    #[error("parameter layout does not match the network")]
    ParamLayout,
}
