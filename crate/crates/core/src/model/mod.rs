//! The EEG-Inception network.

mod check;
mod config;
mod inception;
mod io;
mod network;
mod residual;

pub use check::{check_model_gradient, loss_and_gradient, loss_at};
pub use config::{block_param_counts, count_params, inception_params, BlockParams, ModelConfig};
pub use inception::{InceptionCache, InceptionModule};
pub use io::{
    decode_model, encode_model, inspect_model, load_model, save_model, ModelHeader, TensorEntry, TensorKind,
    MODEL_FORMAT_VERSION, MODEL_MAGIC,
};
pub use network::{EegInception, ModelCache};
pub use residual::{ResidualCache, ResidualProjection};
