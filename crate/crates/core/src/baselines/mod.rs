//! Reference methods: VCA endmember extraction and the single-pixel
//! autoencoder.

mod ae;
mod vca;

pub use ae::baseline_ae_train;
pub use vca::{vca, VcaResult};
