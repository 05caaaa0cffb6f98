//! The bidirectional LSTM classifier, from parameters to training loop.

mod adam;
mod checkpoint;
mod lstm;
mod mat;
mod model;
pub mod reference;
mod train;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use lstm::{bilstm_layer_forward, lstm_cell_forward, xavier_init, CellState, LstmParams};
pub use mat::Mat;
pub use model::{
    backward, cross_entropy, model_forward, predict, Gradients, Model, ModelConfig, ParamSet,
    PREICTAL_CLASS, PROB_CLAMP,
};
pub use train::{train, EpochStats};
