use crate::data::HsiCube;
use crate::error::Result;
use crate::model::{initialize, train_model, Architecture, ModelConfig, TrainOutput};

/// Trains the plain autoencoder: same encoder, decoder, loss and optimiser
/// as the attention network, but each pixel is encoded on its own.
pub fn baseline_ae_train(cube: &HsiCube, config: &ModelConfig) -> Result<TrainOutput> {
    train_model(cube, initialize(cube, config, Architecture::Baseline)?)
}
