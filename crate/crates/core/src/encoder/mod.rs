//! Dual-graph attention encoder with its own small reverse-mode autograd.

mod checkpoint;
mod gradcheck;
mod layers;
mod model;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use checkpoint::{save_checkpoint, write_checkpoint, Checkpoint, CheckpointError, FORMAT_VERSION};
pub use gradcheck::{grad_check, grad_check_with, GradCheckOptions, GradCheckReport};
pub use layers::{
    attention, feed_forward, fusion_step, gated_fusion, gcn_layer, layer_norm, linear, normalized_adjacency,
    AttentionParams, FeedForwardParams, FusionMode, FusionParams, FusionTrace, LayerNormParams,
};
pub use model::{EncoderConfig, GamaModel, ModelOutput, PreparedInput};
pub use params::{ParamId, ParamStore};
pub use tape::{Tape, Var, LAYER_NORM_EPS};
pub use tensor::{Scalar, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncoderError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
}
