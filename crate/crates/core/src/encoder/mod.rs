//! Post-layer-norm transformer encoder, its masked-language-model head and
//! a pooled classification head, all in `f64` with hand-written gradients.

mod checkpoint;
mod config;
mod heads;
mod loss;
mod model;
mod ops;
mod params;

pub use checkpoint::{Checkpoint, CheckpointMetadata, NamedTensor, TokenizerFiles};
pub use config::{count_params, EncoderConfig, PROFILES};
pub use heads::{softmax, ClassifierTrace, MlmTrace, CLASSIFIER_DROPOUT};
pub use loss::{LossStats, Objective};
pub use model::{EncoderOutput, ForwardTrace, Mode};
pub use ops::{gelu, gelu_derivative};
pub use params::{
    ClassifierHead, Dense, Embeddings, EncoderLayer, LayerNorm, MlmHead, ModelParams, ParamKind,
    TensorMut, TensorRef, INIT_STD,
};
