//! Spatial-attention weighted autoencoder for hyperspectral unmixing.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense tensors, a reverse-mode tape, Adam, and a
//!   finite-difference gradient checker.
//! * [`data`]: cube and ground-truth files, window extraction, batching and a
//!   synthetic linear-mixture generator.
//! * [`model`]: the attention-weighted network, its loss, training and
//!   full-cube inference, plus checkpoints.
//! * [`baselines`]: vertex component analysis and the plain autoencoder.
//! * [`metrics`]: endmember matching, SAD/RMSE reports.
//! * [`render`]: grayscale abundance maps and spectra tables.
//! * [`ablation`]: variant and window-size sweeps over seeds.

pub mod ablation;
pub mod baselines;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod render;
pub mod tensor;

pub use error::{Error, Result};
