#![allow(dead_code)]
pub mod oracle;


use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sawu_core::data::{HsiCube, Padding, WindowBatch};
use sawu_core::model::{loss, Architecture, Mode, Model, ModelConfig, ModelParams, ParamId, ParamVars};
use sawu_core::tensor::{grad_check, Graph, Tensor, Var};
use sawu_core::Result;

pub fn random_cube(h: usize, w: usize, l: usize, seed: u64) -> HsiCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..h * w * l).map(|_| rng.random_range(0.1..1.0)).collect();
    HsiCube::new(h, w, l, values).unwrap()
}

pub fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Network with random weights on a random `h×w×l` cube; the decoder is
/// random and positive so no extraction step is involved.
pub fn random_model(config: ModelConfig, h: usize, w: usize, seed: u64) -> (Model, HsiCube) {
    let cube = random_cube(h, w, config.bands, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let decoder = random_tensor(&[config.bands, config.endmembers], 0.05, 1.0, &mut rng);
    let mut params = ModelParams::init(&config, decoder, &mut rng).unwrap();
    for id in [ParamId::PixelAttentionBias, ParamId::WindowAttentionBias, ParamId::BnShift] {
        let t = params.get_mut(id);
        let shape = t.shape().to_vec();
        *t = random_tensor(&shape, -0.3, 0.3, &mut rng);
    }
    let t = params.get_mut(ParamId::BnScale);
    let shape = t.shape().to_vec();
    *t = random_tensor(&shape, 0.5, 1.5, &mut rng);
    (Model::new(config, Architecture::Sawu, params).unwrap(), cube)
}

/// The 3×3×6, P=3 instance used for end-to-end gradient checks.
pub fn toy_instance(seed: u64) -> (Model, WindowBatch) {
    let config = ModelConfig {
        window: 3,
        endmembers: 3,
        bands: 6,
        ..ModelConfig::default()
    };
    let (model, cube) = random_model(config, 3, 3, seed);
    let batch = WindowBatch::gather(&cube, &[4], 3, Padding::Reflect).unwrap();
    (model, batch)
}

fn replace(vars: &mut ParamVars, id: ParamId, v: Var) {
    match id {
        ParamId::PixelAttentionWeight => vars.pa_weight = v,
        ParamId::PixelAttentionBias => vars.pa_bias = v,
        ParamId::WindowAttentionWeight => vars.wa_weight = v,
        ParamId::WindowAttentionBias => vars.wa_bias = v,
        ParamId::Encoder => vars.encoder = v,
        ParamId::BnScale => vars.bn_scale = v,
        ParamId::BnShift => vars.bn_shift = v,
        ParamId::Decoder => vars.decoder = v,
    }
}

/// Training-mode loss as a function of one parameter tensor, the others
/// held fixed. The dropout mask is the same on every evaluation.
pub fn loss_of_group(g: &mut Graph, model: &Model, batch: &WindowBatch, id: ParamId, x: Var) -> Result<Var> {
    let mut vars = ParamVars::register(g, &model.params, false);
    replace(&mut vars, id, x);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let f = model.forward(g, &vars, batch, Mode::Train, &mut rng)?;
    let c = &model.config;
    Ok(loss(g, f.centers, f.reconstruction, f.abundances, c.lambda1, c.lambda2)?.value)
}

/// Worst relative finite-difference error per parameter group.
pub fn group_gradient_errors(model: &Model, batch: &WindowBatch) -> Vec<(ParamId, f64)> {
    ParamId::ALL
        .iter()
        .map(|&id| {
            let err = grad_check(
                |g, x| loss_of_group(g, model, batch, id, x),
                model.params.get(id),
                1e-6,
            )
            .unwrap();
            (id, err)
        })
        .collect()
}
