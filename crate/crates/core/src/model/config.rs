use serde::{Deserialize, Serialize};

use crate::data::Padding;
use crate::error::{Error, Result};

/// Hyperparameters of one training run. Defaults follow the published
/// settings: λ1 = 12, λ2 = 2e-3, batch 128, 300 epochs, encoder learning
/// rate 1e-3 and decoder learning rate 1e-5.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Window side `K` (odd).
    pub window: usize,
    /// Endmember count `P`.
    pub endmembers: usize,
    /// Band count `L`; 0 means "take it from the cube".
    pub bands: usize,
    /// Weight of the spectral-angle reconstruction term.
    pub lambda1: f64,
    /// Weight of the l½ sparsity term.
    pub lambda2: f64,
    pub dropout: f64,
    /// Guard added to the l1 norm when normalizing abundances.
    pub eps: f64,
    pub pixel_attention: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_encoder: f64,
    pub lr_decoder: f64,
    pub seed: u64,
    pub padding: Padding,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window: 3,
            endmembers: 4,
            bands: 0,
            lambda1: 12.0,
            lambda2: 2e-3,
            dropout: 0.1,
            eps: 1e-9,
            pixel_attention: true,
            epochs: 300,
            batch_size: 128,
            lr_encoder: 1e-3,
            lr_decoder: 1e-5,
            seed: 0,
            padding: Padding::Reflect,
        }
    }
}

impl ModelConfig {
    /// Fills in `bands` from the data when it was left at 0, then validates.
    pub fn resolved(&self, bands: usize) -> Result<Self> {
        let mut c = self.clone();
        if c.bands == 0 {
            c.bands = bands;
        } else if c.bands != bands {
            return Err(Error::Config(format!(
                "configured for {} bands but the cube has {bands}",
                c.bands
            )));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.window == 0 || self.window.is_multiple_of(2) {
            return fail(format!("window size must be odd and ≥ 1, got {}", self.window));
        }
        if self.endmembers == 0 || self.endmembers >= self.bands {
            return fail(format!(
                "need 0 < endmembers < bands, got P={} L={}",
                self.endmembers, self.bands
            ));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0)
            || !self.lambda1.is_finite()
            || !self.lambda2.is_finite()
        {
            return fail("loss weights must be finite and nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout rate {} outside [0, 1)", self.dropout));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return fail(format!("eps must be finite and nonnegative, got {}", self.eps));
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive".into());
        }
        for (name, lr) in [("encoder", self.lr_encoder), ("decoder", self.lr_decoder)] {
            if !(lr > 0.0) || !lr.is_finite() {
                return fail(format!("{name} learning rate must be positive, got {lr}"));
            }
        }
        Ok(())
    }

    /// Entries in the attention projection output: `K⁴`.
    pub fn attention_logits(&self) -> usize {
        self.window.pow(4)
    }

    /// Slots per window: `K²`.
    pub fn window_area(&self) -> usize {
        self.window * self.window
    }
}
