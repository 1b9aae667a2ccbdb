//! Attention encoder, mean pooling, sigmoid scorer and their hand-written
//! reverse pass, plus the Adam optimizer.

mod adam;
mod model;

pub use adam::{Adam, AdamConfig, StepOutcome};
pub use model::{
    attention_layer, backward, backward_from_logit, forward, sigmoid, softmax_rows,
    AttentionWeights, ForwardTrace, Gradients, LayerTrace, ModelConfig, ModelParameters,
};
