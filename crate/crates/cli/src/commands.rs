use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sawu_core::ablation::{run_ablation, AblationPlan};
use sawu_core::baselines::baseline_ae_train;
use sawu_core::data::{
    load_abundances, load_cube, load_ground_truth, measured_snr_db, read_matrix_text, save_abundances,
    save_cube, write_matrix_text, CubeFormat, HsiCube, SyntheticSpec,
};
use sawu_core::metrics::{config_hash, evaluate};
use sawu_core::model::{infer_abundances, load_checkpoint, save_checkpoint, train, Architecture, ModelConfig};
use sawu_core::render::{write_abundance_pgm, write_spectra_csv};

use crate::args::{AblateArgs, Command, EvalArgs, GenerateArgs, RenderArgs, TrainArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Render(a) => render(&a),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn config_text(c: &ModelConfig) -> Result<String> {
    toml::to_string(c).context("serializing configuration")
}

fn echo_config(c: &ModelConfig) -> Result<String> {
    let text = config_text(c)?;
    println!("# resolved configuration");
    print!("{text}");
    Ok(text)
}

fn load_binary_cube(path: &Path) -> Result<HsiCube> {
    load_cube(path, CubeFormat::Binary).with_context(|| format!("loading cube {}", path.display()))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        endmembers: a.endmembers,
        bands: a.bands,
        height: a.height,
        width: a.width,
        snr_db: a.snr,
        seed: a.seed,
    };
    let (cube, gt) = sawu_core::data::generate_synthetic(&spec)?;
    prepare_out(&a.out)?;
    save_cube(&a.out.join("cube.hsi"), &cube, CubeFormat::Binary)?;
    write_matrix_text(&a.out.join("endmembers.txt"), &gt.endmembers)?;
    save_abundances(&a.out.join("abundances.hsi"), &gt.abundances)?;
    let snr = measured_snr_db(&gt.mixtures(), cube.values());
    println!(
        "wrote {}×{}×{} cube with {} endmembers to {}",
        a.height,
        a.width,
        a.bands,
        a.endmembers,
        a.out.display()
    );
    println!("snr_db={snr}");
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let cube = load_binary_cube(&a.cube)?;
    let config = a.model.resolve(a.seed)?.resolved(cube.bands())?;
    let text = echo_config(&config)?;
    prepare_out(&a.out)?;
    fs::write(a.out.join("config.toml"), &text).context("writing config.toml")?;
    let out = if a.baseline {
        baseline_ae_train(&cube, &config)?
    } else {
        train(&cube, &config)?
    };
    let mut log = String::from("# epoch loss degenerate\n");
    for (i, (loss, degenerate)) in out.loss_history.iter().zip(&out.degenerate_per_epoch).enumerate() {
        let _ = writeln!(log, "{} {loss} {degenerate}", i + 1);
    }
    fs::write(a.out.join("loss.txt"), log).context("writing loss.txt")?;
    save_checkpoint(&a.out.join("model.ckpt"), &out.model)?;
    if let Some(last) = out.loss_history.last() {
        println!("final_loss={last}");
    }
    if let Some(d) = out.degenerate_per_epoch.last() {
        println!("degenerate_last_epoch={d}");
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)?;
    let cube = load_binary_cube(&a.cube)?;
    let text = echo_config(&model.config)?;
    if model.architecture == Architecture::Baseline {
        println!("# architecture = baseline");
    }
    let inference = infer_abundances(&model, &cube)?;
    let endmembers = model.params.endmembers();
    prepare_out(&a.out)?;
    save_abundances(&a.out.join("abundances.hsi"), &inference.abundances)?;
    write_matrix_text(&a.out.join("endmembers.txt"), &endmembers)?;
    write_spectra_csv(&a.out.join("endmembers.csv"), &endmembers)?;
    for k in 0..inference.abundances.endmembers() {
        write_abundance_pgm(&a.out.join(format!("abundance_{}.pgm", k + 1)), &inference.abundances, k)?;
    }
    println!("degenerate_pixels={}", inference.degenerate);

    let Some(gt_em_path) = &a.gt_endmembers else {
        eprintln!("warning: no ground-truth endmembers given; wrote estimates without scores");
        return Ok(());
    };
    let mut report = match &a.gt_abundances {
        Some(gt_ab_path) => {
            let gt = load_ground_truth(gt_em_path, gt_ab_path)?;
            evaluate(&endmembers, &gt.endmembers, Some((&inference.abundances, &gt.abundances)))?
        }
        None => {
            eprintln!("warning: no ground-truth abundances given; scoring endmembers only");
            evaluate(&endmembers, &read_matrix_text(gt_em_path)?, None)?
        }
    };
    report.seed = Some(model.config.seed);
    report.config_hash = Some(config_hash(&text));
    fs::write(a.out.join("metrics.txt"), report.to_key_values()).context("writing metrics.txt")?;
    print!("{}", report.human_table());
    Ok(())
}

fn ablate(a: &AblateArgs) -> Result<()> {
    if a.seeds.is_empty() || a.windows.is_empty() {
        bail!("ablation needs at least one seed and one window size");
    }
    let cube = load_binary_cube(&a.cube)?;
    let gt = load_ground_truth(&a.gt_endmembers, &a.gt_abundances)?;
    let base = a.model.resolve(None)?.resolved(cube.bands())?;
    for &k in &a.windows {
        ModelConfig { window: k, ..base.clone() }.validate()?;
    }
    echo_config(&base)?;
    println!("# seeds = {:?}", a.seeds);
    println!("# windows = {:?}", a.windows);
    prepare_out(&a.out)?;
    let plan = AblationPlan {
        base,
        seeds: a.seeds.clone(),
        windows: a.windows.clone(),
    };
    let report = run_ablation(&cube, &gt, &plan, |variant, window, r| {
        eprintln!(
            "{} {window}x{window} seed {}: avg SAD {:.4}",
            variant.label(),
            r.seed,
            r.report.sad_avg
        );
    })?;
    fs::write(a.out.join("ablation.txt"), report.to_key_values()).context("writing ablation.txt")?;
    print!("{}", report.table());
    Ok(())
}

fn render(a: &RenderArgs) -> Result<()> {
    let map = load_abundances(&a.abundances)?;
    prepare_out(&a.out)?;
    for k in 0..map.endmembers() {
        write_abundance_pgm(&a.out.join(format!("abundance_{}.pgm", k + 1)), &map, k)?;
    }
    if let Some(path) = &a.spectra {
        write_spectra_csv(&a.out.join("endmembers.csv"), &read_matrix_text(path)?)?;
    }
    println!("rendered {} maps to {}", map.endmembers(), a.out.display());
    Ok(())
}
