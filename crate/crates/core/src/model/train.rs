use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{loss, Architecture, Mode, Model, ParamVars};
use super::{ModelConfig, ModelParams, ParamId};
use crate::baselines::vca;
use crate::data::{make_batches, BatchPlan, HsiCube};
use crate::error::{Error, Result};
use crate::tensor::{adam_step, AdamConfig, AdamState, BatchStats, Tensor};

/// Weight kept from the previous running statistics at each update.
pub const BN_MOMENTUM: f64 = 0.9;

// ChaCha stream ids; batch shuffling uses the epoch number as its stream.
const INIT_STREAM: u64 = 1 << 40;
const DROPOUT_STREAM: u64 = (1 << 40) + 1;

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: Model,
    /// Pixel-weighted mean loss of each epoch.
    pub loss_history: Vec<f64>,
    /// All-zero abundance vectors met during each epoch.
    pub degenerate_per_epoch: Vec<usize>,
}

/// Builds the untrained network: decoder from VCA endmembers, Glorot
/// attention and encoder weights.
pub fn initialize(cube: &HsiCube, config: &ModelConfig, architecture: Architecture) -> Result<Model> {
    let config = config.resolved(cube.bands())?;
    let extracted = vca(cube, config.endmembers, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    let params = ModelParams::init(&config, extracted.endmembers, &mut rng)?;
    Model::new(config, architecture, params)
}

/// Trains the attention-weighted network on `cube`.
pub fn train(cube: &HsiCube, config: &ModelConfig) -> Result<TrainOutput> {
    train_model(cube, initialize(cube, config, Architecture::Sawu)?)
}

/// Runs `model.config.epochs` epochs of mini-batch Adam from the given
/// starting point. The decoder has its own learning rate and is clamped
/// to nonnegative values after every step.
pub fn train_model(cube: &HsiCube, mut model: Model) -> Result<TrainOutput> {
    let config = model.config.clone();
    if cube.bands() != config.bands {
        return Err(Error::Config(format!(
            "model expects {} bands, cube has {}",
            config.bands,
            cube.bands()
        )));
    }
    let plan = BatchPlan::new(config.seed, config.batch_size)?;
    let k = model.input_window();
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);

    let mut encoder_state = AdamState::new(
        AdamConfig::default(),
        ParamId::ENCODER_GROUP.iter().map(|id| model.params.get(*id)),
    );
    let mut decoder_state = AdamState::new(AdamConfig::default(), [&model.params.decoder]);

    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut degenerate_per_epoch = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        let mut degenerate = 0;
        for (index, batch) in make_batches(cube, &plan, epoch, k, config.padding)?.enumerate() {
            let wrap = |e: Error| Error::Training {
                epoch: epoch + 1,
                batch: index,
                source: Box::new(e),
            };
            let step = train_step(
                &mut model,
                &batch,
                &mut dropout_rng,
                &mut encoder_state,
                &mut decoder_state,
            )
            .map_err(wrap)?;
            total += step.loss * batch.len() as f64;
            degenerate += step.degenerate;
        }
        let mean = total / cube.pixel_count() as f64;
        if !mean.is_finite() {
            return Err(Error::Training {
                epoch: epoch + 1,
                batch: 0,
                source: Box::new(Error::NonFinite { op: "epoch loss" }),
            });
        }
        loss_history.push(mean);
        degenerate_per_epoch.push(degenerate);
    }
    Ok(TrainOutput {
        model,
        loss_history,
        degenerate_per_epoch,
    })
}

struct StepResult {
    loss: f64,
    degenerate: usize,
}

fn train_step(
    model: &mut Model,
    batch: &crate::data::WindowBatch,
    rng: &mut ChaCha8Rng,
    encoder_state: &mut AdamState,
    decoder_state: &mut AdamState,
) -> Result<StepResult> {
    let mut g = crate::tensor::Graph::new();
    let vars = ParamVars::register(&mut g, &model.params, true);
    let fwd = model.forward(&mut g, &vars, batch, Mode::Train, rng)?;
    let c = &model.config;
    let terms = loss(
        &mut g,
        fwd.centers,
        fwd.reconstruction,
        fwd.abundances,
        c.lambda1,
        c.lambda2,
    )?;
    let value = g.value(terms.value).item()?;
    let mut grads = g.backward(terms.value)?;
    let mut take = |id: ParamId| -> Tensor {
        grads
            .take(vars.get(id))
            .expect("every trainable leaf receives a gradient")
    };
    let enc_grads: Vec<Tensor> = ParamId::ENCODER_GROUP.iter().map(|id| take(*id)).collect();
    let dec_grad = take(ParamId::Decoder);

    let (lr_enc, lr_dec) = (c.lr_encoder, c.lr_decoder);
    {
        let mut group = model.params.group_mut(&ParamId::ENCODER_GROUP);
        let refs: Vec<&Tensor> = enc_grads.iter().collect();
        adam_step(&mut group, &refs, encoder_state, lr_enc)?;
    }
    adam_step(&mut [&mut model.params.decoder], &[&dec_grad], decoder_state, lr_dec)?;
    model
        .params
        .decoder
        .data_mut()
        .iter_mut()
        .for_each(|v| *v = v.max(0.0));
    if let Some(stats) = fwd.bn_stats {
        update_running_stats(&mut model.params, &stats);
    }
    Ok(StepResult {
        loss: value,
        degenerate: terms.degenerate,
    })
}

fn update_running_stats(params: &mut ModelParams, stats: &BatchStats) {
    let blend = |running: &mut Tensor, batch: &[f64]| {
        for (r, b) in running.data_mut().iter_mut().zip(batch) {
            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
        }
    };
    blend(&mut params.bn_running_mean, &stats.mean);
    blend(&mut params.bn_running_var, &stats.var);
}
