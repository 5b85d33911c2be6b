//! The spatial-attention weighted unmixing network.

mod checkpoint;
mod config;
mod infer;
mod net;
mod params;
mod train;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, model_from_bytes, save_checkpoint, CHECKPOINT_MAGIC};
pub use config::ModelConfig;
pub use infer::{infer_abundances, Inference};
pub use net::{
    decode, encode, fold_window, loss, normalize_abundance, normalize_vector, pixel_attention,
    pixel_loss, weighted_fold, window_attention, Architecture, AttentionMap, Forward, LossTerms,
    Mode, Model, ParamVars, BN_EPS,
};
pub use params::{ModelParams, ParamId};
pub use train::{initialize, train, train_model, TrainOutput, BN_MOMENTUM};
