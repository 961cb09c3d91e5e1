//! A small transformer encoder for token classification over linearized
//! tables, with exact gradients and a linearly decaying optimizer.

mod encoder;
mod model;
mod optim;
mod train;

pub use encoder::{
    accumulate_gradients, backward, cross_entropy, forward, forward_unmasked, forward_with,
    predict_tags, ForwardPass,
};
pub use model::{Checkpoint, EncoderConfig, EncoderModel, LayerParams, Params, TensorData, TensorRef};
pub use optim::{linear_lr, Optimizer, OptimizerKind};
pub use train::{
    predict_table, train, Augmenter, EpochRecord, TrainConfig, TrainOutcome, TrainSetup,
};

/// RNG used throughout training and augmentation.
pub type Rng = rand_chacha::ChaCha8Rng;
