use rand::Rng;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Identifies one learnable tensor of [`ModelParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    PixelAttentionWeight,
    PixelAttentionBias,
    WindowAttentionWeight,
    WindowAttentionBias,
    Encoder,
    BnScale,
    BnShift,
    Decoder,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::PixelAttentionWeight,
        ParamId::PixelAttentionBias,
        ParamId::WindowAttentionWeight,
        ParamId::WindowAttentionBias,
        ParamId::Encoder,
        ParamId::BnScale,
        ParamId::BnShift,
        ParamId::Decoder,
    ];

    /// Everything except the decoder, which has its own learning rate.
    pub const ENCODER_GROUP: [ParamId; 7] = [
        ParamId::PixelAttentionWeight,
        ParamId::PixelAttentionBias,
        ParamId::WindowAttentionWeight,
        ParamId::WindowAttentionBias,
        ParamId::Encoder,
        ParamId::BnScale,
        ParamId::BnShift,
    ];
}

/// All weights of the network plus batch-norm running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Per-band scale of the 1×1 convolution gating the centre spectrum, `[L]`.
    pub pa_weight: Tensor,
    /// `[L]`
    pub pa_bias: Tensor,
    /// Attention projection `W_D`, `[L, K⁴]`.
    pub wa_weight: Tensor,
    /// `[K⁴]`
    pub wa_bias: Tensor,
    /// Encoder `W^(e)`, `[P, L]`, no bias.
    pub encoder: Tensor,
    pub bn_scale: Tensor,
    pub bn_shift: Tensor,
    pub bn_running_mean: Tensor,
    pub bn_running_var: Tensor,
    /// Decoder `W^(d)`, `[L, P]`; its columns are the endmember spectra.
    pub decoder: Tensor,
}

fn glorot<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-a..=a)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape product matches")
}

impl ModelParams {
    /// Glorot-uniform attention and encoder weights, zero biases, identity
    /// batch-norm, and the given decoder with negative entries clamped to 0.
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, decoder: Tensor, rng: &mut R) -> Result<Self> {
        let (l, p) = (config.bands, config.endmembers);
        let logits = config.attention_logits();
        if decoder.shape() != [l, p] {
            return Err(Error::Shape {
                op: "init decoder",
                left: vec![l, p],
                right: decoder.shape().to_vec(),
            });
        }
        let mut decoder = decoder;
        decoder.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        // fixed draw order keeps runs with and without pixel attention aligned
        let pa_weight = glorot(&[l], 1, 1, rng);
        let wa_weight = glorot(&[l, logits], l, logits, rng);
        let encoder = glorot(&[p, l], l, p, rng);
        Ok(Self {
            pa_weight,
            pa_bias: Tensor::zeros(&[l]),
            wa_weight,
            wa_bias: Tensor::zeros(&[logits]),
            encoder,
            bn_scale: Tensor::full(&[p], 1.0),
            bn_shift: Tensor::zeros(&[p]),
            bn_running_mean: Tensor::zeros(&[p]),
            bn_running_var: Tensor::full(&[p], 1.0),
            decoder,
        })
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        match id {
            ParamId::PixelAttentionWeight => &self.pa_weight,
            ParamId::PixelAttentionBias => &self.pa_bias,
            ParamId::WindowAttentionWeight => &self.wa_weight,
            ParamId::WindowAttentionBias => &self.wa_bias,
            ParamId::Encoder => &self.encoder,
            ParamId::BnScale => &self.bn_scale,
            ParamId::BnShift => &self.bn_shift,
            ParamId::Decoder => &self.decoder,
        }
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        match id {
            ParamId::PixelAttentionWeight => &mut self.pa_weight,
            ParamId::PixelAttentionBias => &mut self.pa_bias,
            ParamId::WindowAttentionWeight => &mut self.wa_weight,
            ParamId::WindowAttentionBias => &mut self.wa_bias,
            ParamId::Encoder => &mut self.encoder,
            ParamId::BnScale => &mut self.bn_scale,
            ParamId::BnShift => &mut self.bn_shift,
            ParamId::Decoder => &mut self.decoder,
        }
    }

    /// The learnable tensors of `ids`, mutably, in order.
    pub fn group_mut(&mut self, ids: &[ParamId]) -> Vec<&mut Tensor> {
        let mut slots: Vec<Option<&mut Tensor>> = vec![
            Some(&mut self.pa_weight),
            Some(&mut self.pa_bias),
            Some(&mut self.wa_weight),
            Some(&mut self.wa_bias),
            Some(&mut self.encoder),
            Some(&mut self.bn_scale),
            Some(&mut self.bn_shift),
            Some(&mut self.decoder),
        ];
        ids.iter()
            .map(|id| {
                let pos = ParamId::ALL.iter().position(|x| x == id).expect("known id");
                slots[pos].take().expect("each id at most once")
            })
            .collect()
    }

    /// Endmember matrix `L×P`: the decoder weights, verbatim.
    pub fn endmembers(&self) -> Tensor {
        self.decoder.clone()
    }

    pub(crate) fn all_tensors(&self) -> [&Tensor; 10] {
        [
            &self.pa_weight,
            &self.pa_bias,
            &self.wa_weight,
            &self.wa_bias,
            &self.encoder,
            &self.bn_scale,
            &self.bn_shift,
            &self.bn_running_mean,
            &self.bn_running_var,
            &self.decoder,
        ]
    }

    pub(crate) fn from_tensors(mut t: Vec<Tensor>) -> Result<Self> {
        if t.len() != 10 {
            return Err(Error::Usage(format!("expected 10 parameter tensors, got {}", t.len())));
        }
        let mut next = || t.remove(0);
        Ok(Self {
            pa_weight: next(),
            pa_bias: next(),
            wa_weight: next(),
            wa_bias: next(),
            encoder: next(),
            bn_scale: next(),
            bn_shift: next(),
            bn_running_mean: next(),
            bn_running_var: next(),
            decoder: next(),
        })
    }

    pub(crate) fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let (l, p, k4) = (config.bands, config.endmembers, config.attention_logits());
        let expected: [Vec<usize>; 10] = [
            vec![l],
            vec![l],
            vec![l, k4],
            vec![k4],
            vec![p, l],
            vec![p],
            vec![p],
            vec![p],
            vec![p],
            vec![l, p],
        ];
        for (t, e) in self.all_tensors().iter().zip(expected) {
            if t.shape() != e.as_slice() {
                return Err(Error::Shape {
                    op: "model parameters",
                    left: e,
                    right: t.shape().to_vec(),
                });
            }
        }
        Ok(())
    }
}
