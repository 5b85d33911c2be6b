//! Variant and window-size sweeps over a list of seeds.
//!
//! The sweep has one row per network variant at the base window size
//! (plain autoencoder, attention without pixel gating, full attention)
//! followed by one row per window size for the full network. Cells that
//! appear twice are trained once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::baselines::baseline_ae_train;
use crate::data::{GroundTruth, HsiCube};
use crate::error::Result;
use crate::metrics::{evaluate, mean_std, median, MetricsReport};
use crate::model::{infer_abundances, train, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Baseline,
    WithoutPixelAttention,
    Sawu,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::WithoutPixelAttention, Variant::Sawu];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::WithoutPixelAttention => "sawu-no-pa",
            Variant::Sawu => "sawu",
        }
    }
}

/// Scores of one trained network.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub report: MetricsReport,
    pub final_loss: f64,
    /// All-zero abundance vectors in the final inference pass.
    pub degenerate: usize,
}

/// Trains `variant` with `config` (its seed and window included) and
/// scores it against `gt`.
pub fn run_cell(cube: &HsiCube, gt: &GroundTruth, config: &ModelConfig, variant: Variant) -> Result<SeedResult> {
    let out = match variant {
        Variant::Baseline => baseline_ae_train(cube, config)?,
        Variant::WithoutPixelAttention => train(
            cube,
            &ModelConfig {
                pixel_attention: false,
                ..config.clone()
            },
        )?,
        Variant::Sawu => train(
            cube,
            &ModelConfig {
                pixel_attention: true,
                ..config.clone()
            },
        )?,
    };
    let inference = infer_abundances(&out.model, cube)?;
    let mut report = evaluate(
        &out.model.params.endmembers(),
        &gt.endmembers,
        Some((&inference.abundances, &gt.abundances)),
    )?;
    report.seed = Some(config.seed);
    Ok(SeedResult {
        seed: config.seed,
        report,
        final_loss: out.loss_history.last().copied().unwrap_or(f64::NAN),
        degenerate: inference.degenerate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationPlan {
    pub base: ModelConfig,
    pub seeds: Vec<u64>,
    pub windows: Vec<usize>,
}

impl AblationPlan {
    pub const DEFAULT_WINDOWS: [usize; 5] = [1, 3, 5, 7, 9];

    pub fn new(base: ModelConfig, seeds: Vec<u64>) -> Self {
        Self {
            base,
            seeds,
            windows: Self::DEFAULT_WINDOWS.to_vec(),
        }
    }

    /// `(variant, window)` of every row, in output order.
    pub fn rows(&self) -> Vec<(Variant, usize)> {
        Variant::ALL
            .iter()
            .map(|v| (*v, self.base.window))
            .chain(self.windows.iter().map(|k| (Variant::Sawu, *k)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub window: usize,
    pub results: Vec<SeedResult>,
}

impl AblationRow {
    pub fn avg_sad(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.report.sad_avg).collect()
    }

    pub fn avg_rmse(&self) -> Vec<f64> {
        self.results.iter().filter_map(|r| r.report.rmse_avg).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

/// Runs every distinct cell of the plan; `progress` is told about each
/// finished training run.
pub fn run_ablation(
    cube: &HsiCube,
    gt: &GroundTruth,
    plan: &AblationPlan,
    mut progress: impl FnMut(Variant, usize, &SeedResult),
) -> Result<AblationReport> {
    let mut done: BTreeMap<(Variant, usize, u64), SeedResult> = BTreeMap::new();
    let mut rows = Vec::new();
    for (variant, window) in plan.rows() {
        let mut results = Vec::with_capacity(plan.seeds.len());
        for &seed in &plan.seeds {
            let key = (variant, window, seed);
            if !done.contains_key(&key) {
                let config = ModelConfig {
                    seed,
                    window,
                    ..plan.base.clone()
                };
                let r = run_cell(cube, gt, &config, variant)?;
                progress(variant, window, &r);
                done.insert(key, r);
            }
            results.push(done[&key].clone());
        }
        rows.push(AblationRow {
            variant,
            window,
            results,
        });
    }
    Ok(AblationReport { rows })
}

impl AblationReport {
    /// Mean ± stddev and median of the average SAD per row, SAD scaled by 10².
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>18} {:>12} {:>18}",
            "variant", "window", "SAD(e-2) mean±sd", "SAD median", "RMSE(e-2) mean±sd"
        );
        for row in &self.rows {
            let sad = row.avg_sad();
            let (m, s) = mean_std(&sad);
            let (rm, rs) = mean_std(&row.avg_rmse());
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>18} {:>12.2} {:>18}",
                row.variant.label(),
                format!("{0}x{0}", row.window),
                format!("{:.2} ± {:.2}", m * 100.0, s * 100.0),
                median(&sad) * 100.0,
                format!("{:.2} ± {:.2}", rm * 100.0, rs * 100.0),
            );
        }
        out
    }

    /// `row.<i>.<field>=value` lines with raw per-seed values.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            let i = i + 1;
            let sad = row.avg_sad();
            let (m, s) = mean_std(&sad);
            let _ = writeln!(out, "row.{i}.variant={}", row.variant.label());
            let _ = writeln!(out, "row.{i}.window={}", row.window);
            for r in &row.results {
                let _ = writeln!(out, "row.{i}.seed.{}.sad_avg={}", r.seed, r.report.sad_avg);
                if let Some(v) = r.report.rmse_avg {
                    let _ = writeln!(out, "row.{i}.seed.{}.rmse_avg={v}", r.seed);
                }
            }
            let _ = writeln!(out, "row.{i}.sad_avg.mean={m}");
            let _ = writeln!(out, "row.{i}.sad_avg.std={s}");
            let _ = writeln!(out, "row.{i}.sad_avg.median={}", median(&sad));
        }
        out
    }
}
