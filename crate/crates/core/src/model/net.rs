//! Forward pass of the attention-weighted autoencoder.
//!
//! Shapes for a batch of `B` windows of side `K` over `L` bands with `P`
//! endmembers:
//!
//! ```text
//! centre x        [B, L]      ─ pixel attention ─▶ x_pa [B, L]
//! x_pa · W_D + b  [B, K⁴]     ─ reshape, softmax ─▶ D̂ [B·K², K²]
//! window pixels   [B·K², L]   ─ W^(e), BN, dropout, ReLU ─▶ h [B·K², P]
//! D̂_b · h_b       [B, K², P]  ─ fold over slots ─▶ Ĥ [B, P]
//! Ĥ / (‖Ĥ‖₁ + ε)  [B, P]      ─ W^(d) ─▶ x̂ [B, L]
//! ```
//!
//! `D̂_b · h_b` is the transpose of `h_Δ · D̂ᵀ`: each window slot receives an
//! attention-weighted mix of every slot's hidden abundances before the fold
//! sums the slots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelParams};
use crate::data::{Window, WindowBatch};
use crate::error::{Error, Result};
use crate::tensor::{BatchStats, Graph, Tensor, Var};

/// Batch-norm variance guard.
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics and active dropout.
    Train,
    /// Running statistics, no dropout.
    Infer,
}

/// Which network is being trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// Spatial attention weighting over a `K×K` window.
    Sawu,
    /// Plain three-layer autoencoder on the centre pixel only.
    Baseline,
}

/// Graph handles for the learnable tensors.
#[derive(Clone, Copy, Debug)]
pub struct ParamVars {
    pub pa_weight: Var,
    pub pa_bias: Var,
    pub wa_weight: Var,
    pub wa_bias: Var,
    pub encoder: Var,
    pub bn_scale: Var,
    pub bn_shift: Var,
    pub decoder: Var,
}

impl ParamVars {
    /// Records every learnable tensor as a leaf, trainable or constant.
    pub fn register(g: &mut Graph, params: &ModelParams, trainable: bool) -> Self {
        let mut leaf = |t: &Tensor| {
            if trainable {
                g.param(t.clone())
            } else {
                g.constant(t.clone())
            }
        };
        Self {
            pa_weight: leaf(&params.pa_weight),
            pa_bias: leaf(&params.pa_bias),
            wa_weight: leaf(&params.wa_weight),
            wa_bias: leaf(&params.wa_bias),
            encoder: leaf(&params.encoder),
            bn_scale: leaf(&params.bn_scale),
            bn_shift: leaf(&params.bn_shift),
            decoder: leaf(&params.decoder),
        }
    }

    pub fn get(&self, id: super::ParamId) -> Var {
        use super::ParamId::*;
        match id {
            PixelAttentionWeight => self.pa_weight,
            PixelAttentionBias => self.pa_bias,
            WindowAttentionWeight => self.wa_weight,
            WindowAttentionBias => self.wa_bias,
            Encoder => self.encoder,
            BnScale => self.bn_scale,
            BnShift => self.bn_shift,
            Decoder => self.decoder,
        }
    }
}

/// `x ⊙ σ(w ⊙ x + b)` per band; `x` itself when disabled.
pub fn pixel_attention(g: &mut Graph, centers: Var, vars: &ParamVars, enabled: bool) -> Result<Var> {
    if !enabled {
        return Ok(centers);
    }
    let z = g.mul_row(centers, vars.pa_weight)?;
    let z = g.add_row_bias(z, vars.pa_bias)?;
    let gate = g.sigmoid(z)?;
    g.mul(centers, gate)
}

/// Row-stochastic `K²×K²` attention per window, stacked as `[B·K², K²]`.
pub fn window_attention(g: &mut Graph, enhanced: Var, vars: &ParamVars, k: usize) -> Result<Var> {
    let b = g.value(enhanced).rows();
    let logits = g.matmul(enhanced, vars.wa_weight)?;
    let logits = g.add_row_bias(logits, vars.wa_bias)?;
    let area = k * k;
    if g.value(logits).cols() != area * area {
        return Err(Error::Config(format!(
            "attention projection has {} outputs, window {k} needs {}",
            g.value(logits).cols(),
            area * area
        )));
    }
    let stacked = g.reshape(logits, &[b * area, area])?;
    g.softmax_rows(stacked)
}

/// Hidden abundances `ReLU(Dropout(BN(W^(e)·x)))` for every window pixel,
/// `[B·K², P]`. In training mode the batch statistics are returned.
#[allow(clippy::too_many_arguments)]
pub fn encode<R: Rng + ?Sized>(
    g: &mut Graph,
    windows: Var,
    vars: &ParamVars,
    params: &ModelParams,
    mode: Mode,
    dropout: f64,
    rng: &mut R,
) -> Result<(Var, Option<BatchStats>)> {
    let t = g.value(windows);
    let l = t.cols();
    let rows = t.numel() / l.max(1);
    let flat = g.reshape(windows, &[rows, l])?;
    let enc_t = g.transpose(vars.encoder)?;
    let z = g.matmul(flat, enc_t)?;
    let (normed, stats) = match mode {
        Mode::Train => {
            let (v, s) = g.batch_norm_train(z, vars.bn_scale, vars.bn_shift, BN_EPS)?;
            (v, Some(s))
        }
        Mode::Infer => {
            let v = g.batch_norm_infer(
                z,
                vars.bn_scale,
                vars.bn_shift,
                params.bn_running_mean.data(),
                params.bn_running_var.data(),
                BN_EPS,
            )?;
            (v, None)
        }
    };
    let dropped = g.dropout(normed, dropout, mode == Mode::Train, rng)?;
    Ok((g.relu(dropped)?, stats))
}

/// Mixes each window's hidden abundances with its attention map and sums
/// over the slots: `[B·K², K²] × [B·K², P] → [B, P]`.
pub fn weighted_fold(g: &mut Graph, attention: Var, hidden: Var, k: usize) -> Result<Var> {
    let area = k * k;
    let rows = g.value(hidden).rows();
    let p = g.value(hidden).cols();
    if !rows.is_multiple_of(area) || g.value(attention).shape() != [rows, area] {
        return Err(Error::Shape {
            op: "weighted_fold",
            left: g.value(attention).shape().to_vec(),
            right: g.value(hidden).shape().to_vec(),
        });
    }
    let b = rows / area;
    let d = g.reshape(attention, &[b, area, area])?;
    let h = g.reshape(hidden, &[b, area, p])?;
    let mixed = g.batch_matmul(d, h)?;
    g.fold_rows(mixed)
}

/// `Ĥ / (‖Ĥ‖₁ + ε)` per row.
pub fn normalize_abundance(g: &mut Graph, folded: Var, eps: f64) -> Result<Var> {
    g.l1_normalize_rows(folded, eps)
}

/// `x̂ = W^(d)·s` per row.
pub fn decode(g: &mut Graph, abundances: Var, vars: &ParamVars) -> Result<Var> {
    let dec_t = g.transpose(vars.decoder)?;
    g.matmul(abundances, dec_t)
}

/// Batch loss and the number of all-zero abundance rows left out of it.
pub struct LossTerms {
    pub value: Var,
    pub degenerate: usize,
}

/// Mean over the batch of `λ1·SAD(x, x̂) + λ2·Σ√s`.
///
/// Rows whose abundance vector is exactly zero reconstruct to zero and have
/// no defined angle; they are counted and excluded from the mean.
pub fn loss(
    g: &mut Graph,
    centers: Var,
    reconstruction: Var,
    abundances: Var,
    lambda1: f64,
    lambda2: f64,
) -> Result<LossTerms> {
    let s = g.value(abundances);
    let p = s.cols();
    let live: Vec<usize> = s
        .data()
        .chunks(p)
        .enumerate()
        .filter(|(_, row)| row.iter().any(|v| *v != 0.0))
        .map(|(i, _)| i)
        .collect();
    let degenerate = s.rows() - live.len();
    if live.is_empty() {
        let zero = g.scale(abundances, 0.0)?;
        let value = g.sum(zero)?;
        return Ok(LossTerms { value, degenerate });
    }
    let (x, xh, s) = if degenerate == 0 {
        (centers, reconstruction, abundances)
    } else {
        (
            g.gather_rows(centers, &live)?,
            g.gather_rows(reconstruction, &live)?,
            g.gather_rows(abundances, &live)?,
        )
    };
    let angle = g.sad_rows(x, xh)?;
    let angle = g.scale(angle, lambda1)?;
    let sparsity = g.l_half_rows(s)?;
    let sparsity = g.scale(sparsity, lambda2)?;
    let per_pixel = g.add(angle, sparsity)?;
    let value = g.mean(per_pixel)?;
    Ok(LossTerms { value, degenerate })
}

/// Graph handles produced by one forward pass.
pub struct Forward {
    pub centers: Var,
    pub attention: Option<Var>,
    pub hidden: Var,
    pub folded: Var,
    pub abundances: Var,
    pub reconstruction: Var,
    pub bn_stats: Option<BatchStats>,
}

/// The network: configuration, architecture and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub architecture: Architecture,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, architecture: Architecture, params: ModelParams) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        Ok(Self {
            config,
            architecture,
            params,
        })
    }

    /// Window side the network consumes (1 for the baseline).
    pub fn input_window(&self) -> usize {
        match self.architecture {
            Architecture::Sawu => self.config.window,
            Architecture::Baseline => 1,
        }
    }

    /// Full forward pass over a batch of windows.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        vars: &ParamVars,
        batch: &WindowBatch,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        let k = self.input_window();
        if batch.windows.shape()[1] != k * k {
            return Err(Error::Shape {
                op: "forward",
                left: vec![k * k],
                right: batch.windows.shape().to_vec(),
            });
        }
        let centers = g.constant(batch.centers.clone());
        let windows = g.constant(batch.windows.clone());
        let c = &self.config;
        let (hidden, bn_stats) = encode(g, windows, vars, &self.params, mode, c.dropout, rng)?;
        let (attention, folded) = match self.architecture {
            Architecture::Sawu => {
                let enhanced = pixel_attention(g, centers, vars, c.pixel_attention)?;
                let attention = window_attention(g, enhanced, vars, k)?;
                (Some(attention), weighted_fold(g, attention, hidden, k)?)
            }
            Architecture::Baseline => (None, hidden),
        };
        let abundances = normalize_abundance(g, folded, c.eps)?;
        let reconstruction = decode(g, abundances, vars)?;
        Ok(Forward {
            centers,
            attention,
            hidden,
            folded,
            abundances,
            reconstruction,
            bn_stats,
        })
    }

    fn eval_graph(&self) -> (Graph, ParamVars) {
        let mut g = Graph::new();
        let vars = ParamVars::register(&mut g, &self.params, false);
        (g, vars)
    }

    /// Pixel attention applied to one spectrum.
    pub fn pixel_attention(&self, spectrum: &[f64]) -> Result<Vec<f64>> {
        let (mut g, vars) = self.eval_graph();
        let x = g.constant(Tensor::matrix(1, spectrum.len(), spectrum.to_vec())?);
        let y = pixel_attention(&mut g, x, &vars, self.config.pixel_attention)?;
        Ok(g.value(y).data().to_vec())
    }

    /// Attention map for a centre spectrum (pixel attention included).
    pub fn window_attention(&self, spectrum: &[f64]) -> Result<AttentionMap> {
        let (mut g, vars) = self.eval_graph();
        let x = g.constant(Tensor::matrix(1, spectrum.len(), spectrum.to_vec())?);
        let y = pixel_attention(&mut g, x, &vars, self.config.pixel_attention)?;
        let d = window_attention(&mut g, y, &vars, self.config.window)?;
        Ok(AttentionMap {
            weights: g.value(d).clone(),
        })
    }

    /// Hidden abundances `h_Δ` of a window as a `P×K²` matrix, one column per slot.
    pub fn encode<R: Rng + ?Sized>(&self, window: &Window, mode: Mode, rng: &mut R) -> Result<Tensor> {
        let (mut g, vars) = self.eval_graph();
        let area = window.size * window.size;
        let w = g.constant(Tensor::new(vec![1, area, window.bands], window.pixels.clone())?);
        let (h, _) = encode(&mut g, w, &vars, &self.params, mode, self.config.dropout, rng)?;
        g.value(h).transposed()
    }

    /// Decoder applied to one abundance vector.
    pub fn decode(&self, abundances: &[f64]) -> Result<Vec<f64>> {
        let (mut g, vars) = self.eval_graph();
        let s = g.constant(Tensor::matrix(1, abundances.len(), abundances.to_vec())?);
        let x = decode(&mut g, s, &vars)?;
        Ok(g.value(x).data().to_vec())
    }

    /// Inference-mode abundance vector `s_c` of one window.
    pub fn unmix_window(&self, window: &Window) -> Result<Vec<f64>> {
        let batch = WindowBatch {
            pixels: vec![0],
            windows: Tensor::new(vec![1, window.size * window.size, window.bands], window.pixels.clone())?,
            centers: Tensor::matrix(1, window.bands, window.row(window.center_slot()).to_vec())?,
        };
        let (mut g, vars) = self.eval_graph();
        // dropout is inactive in inference, so the generator is never drawn from
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        let f = self.forward(&mut g, &vars, &batch, Mode::Infer, &mut unused)?;
        Ok(g.value(f.abundances).data().to_vec())
    }
}

/// One window's `K²×K²` row-stochastic attention weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    pub weights: Tensor,
}

impl AttentionMap {
    pub fn row_sums(&self) -> Vec<f64> {
        let c = self.weights.cols();
        self.weights.data().chunks(c).map(|r| r.iter().sum()).collect()
    }
}

/// `P×K²` hidden abundances folded with an attention map: `Σ_slots (h·D̂ᵀ)`.
pub fn fold_window(attention: &AttentionMap, hidden: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let area = attention.weights.cols();
    let d = g.constant(attention.weights.clone());
    let h = g.constant(hidden.transposed()?);
    let k = (area as f64).sqrt().round() as usize;
    if k * k != area {
        return Err(Error::Usage(format!("attention map of width {area} is not K²")));
    }
    let out = weighted_fold(&mut g, d, h, k)?;
    Ok(g.value(out).data().to_vec())
}

/// `v / (‖v‖₁ + ε)` for one vector.
pub fn normalize_vector(v: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let x = g.constant(Tensor::matrix(1, v.len(), v.to_vec())?);
    let y = normalize_abundance(&mut g, x, eps)?;
    Ok(g.value(y).data().to_vec())
}

/// Per-pixel loss `λ1·SAD(x, x̂) + λ2·Σ√s`.
pub fn pixel_loss(center: &[f64], reconstruction: &[f64], abundances: &[f64], lambda1: f64, lambda2: f64) -> Result<f64> {
    Ok(lambda1 * crate::tensor::sad(center, reconstruction)?
        + lambda2 * crate::tensor::l_half_penalty(abundances)?)
}
