use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sawu_core::data::Padding;
use sawu_core::model::ModelConfig;

#[derive(Parser, Debug)]
#[command(name = "sawu", version, about = "Spatial-attention weighted autoencoder for hyperspectral unmixing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic linear-mixture cube with its ground truth.
    Generate(GenerateArgs),
    /// Train a network and save a checkpoint and loss log.
    Train(TrainArgs),
    /// Score a checkpoint against ground truth and render its outputs.
    Eval(EvalArgs),
    /// Compare variants and window sizes over several seeds.
    Ablate(AblateArgs),
    /// Render an abundance file as grayscale maps.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 4)]
    pub endmembers: usize,
    #[arg(long, default_value_t = 100)]
    pub bands: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Signal-to-noise ratio in dB; `inf` for a noiseless cube.
    #[arg(long, default_value_t = 30.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// Hyperparameter overrides; anything left unset comes from the config
/// file or the built-in defaults.
#[derive(Args, Debug, Default)]
pub struct ModelFlags {
    /// TOML file with model settings; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub endmembers: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr_encoder: Option<f64>,
    #[arg(long)]
    pub lr_decoder: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_parser = parse_padding)]
    pub padding: Option<Padding>,
    /// Train the variant without pixel attention.
    #[arg(long)]
    pub no_pixel_attention: bool,
}

fn parse_padding(s: &str) -> std::result::Result<Padding, String> {
    match s {
        "reflect" => Ok(Padding::Reflect),
        "replicate" => Ok(Padding::Replicate),
        _ => Err(format!("unknown padding {s:?}, expected reflect or replicate")),
    }
}

impl ModelFlags {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, seed: Option<u64>) -> Result<ModelConfig> {
        let mut c = match &self.config {
            Some(path) => read_config(path)?,
            None => ModelConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(endmembers => endmembers, window => window, lambda1 => lambda1, lambda2 => lambda2,
             batch => batch_size, epochs => epochs, lr_encoder => lr_encoder,
             lr_decoder => lr_decoder, dropout => dropout, eps => eps, padding => padding);
        if self.no_pixel_attention {
            c.pixel_attention = false;
        }
        if let Some(seed) = seed {
            c.seed = seed;
        }
        Ok(c)
    }
}

pub fn read_config(path: &Path) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train the plain single-pixel autoencoder instead.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub cube: PathBuf,
    /// Ground-truth endmembers, an `L×P` text matrix.
    #[arg(long)]
    pub gt_endmembers: Option<PathBuf>,
    /// Ground-truth abundances, a binary `H×W×P` file.
    #[arg(long)]
    pub gt_abundances: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub gt_endmembers: PathBuf,
    #[arg(long)]
    pub gt_abundances: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 5, 7, 9])]
    pub windows: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Binary `H×W×P` abundance file.
    #[arg(long)]
    pub abundances: PathBuf,
    /// Optional `L×P` text matrix written out as CSV spectra.
    #[arg(long)]
    pub spectra: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
