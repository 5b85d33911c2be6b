mod common;

use std::f64::consts::FRAC_PI_2;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sawu_core::baselines::{baseline_ae_train, vca};
use sawu_core::data::{extract_window, generate_synthetic, HsiCube, Padding, SyntheticSpec, WindowBatch};
use sawu_core::metrics::{evaluate, rmse_report};
use sawu_core::model::*;
use sawu_core::tensor::{Graph, Tensor};
use sawu_core::Error;

use common::{random_model, random_tensor, toy_instance};

fn config(window: usize, p: usize, l: usize) -> ModelConfig {
    ModelConfig {
        window,
        endmembers: p,
        bands: l,
        ..ModelConfig::default()
    }
}

fn small_scene(seed: u64) -> (HsiCube, sawu_core::data::GroundTruth) {
    generate_synthetic(&SyntheticSpec {
        endmembers: 3,
        bands: 24,
        height: 16,
        width: 16,
        snr_db: 30.0,
        seed,
    })
    .unwrap()
}

#[test]
fn pixel_attention_zero_weights_halves_input() {
    let (mut model, _) = random_model(config(3, 3, 6), 3, 3, 1);
    model.params.pa_weight = Tensor::zeros(&[6]);
    model.params.pa_bias = Tensor::zeros(&[6]);
    let x = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
    let y = model.pixel_attention(&x).unwrap();
    for (a, b) in x.iter().zip(&y) {
        assert_eq!(*b, 0.5 * a);
    }
}

#[test]
fn pixel_attention_saturated_gate_passes_input() {
    let (mut model, _) = random_model(config(3, 3, 6), 3, 3, 1);
    model.params.pa_bias = Tensor::full(&[6], 60.0);
    let x = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
    let y = model.pixel_attention(&x).unwrap();
    for (a, b) in x.iter().zip(&y) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
    }
}

#[test]
fn pixel_attention_matches_scalar_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let (model, _) = random_model(config(3, 3, 8), 3, 3, seed);
        let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = model.pixel_attention(&x).unwrap();
        for b in 0..8 {
            let z = model.params.pa_weight.data()[b] * x[b] + model.params.pa_bias.data()[b];
            let expect = x[b] / (1.0 + (-z).exp());
            assert_abs_diff_eq!(y[b], expect, epsilon = 1e-12);
        }
    }
}

#[test]
fn disabled_pixel_attention_is_identity() {
    let (mut model, _) = random_model(config(3, 3, 6), 3, 3, 1);
    model.config.pixel_attention = false;
    let x = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
    assert_eq!(model.pixel_attention(&x).unwrap(), x.to_vec());
}

#[test]
fn single_slot_attention_is_one() {
    let (model, _) = random_model(config(1, 3, 6), 3, 3, 2);
    let map = model.window_attention(&[0.3, 0.1, 0.9, 0.5, 0.2, 0.7]).unwrap();
    assert_eq!(map.weights.shape(), &[1, 1]);
    assert_eq!(map.weights.data(), &[1.0]);
}

#[test]
fn zero_projection_gives_uniform_attention() {
    let (mut model, _) = random_model(config(3, 3, 6), 3, 3, 2);
    model.params.wa_weight = Tensor::zeros(&[6, 81]);
    model.params.wa_bias = Tensor::zeros(&[81]);
    let map = model.window_attention(&[0.3, 0.1, 0.9, 0.5, 0.2, 0.7]).unwrap();
    assert_eq!(map.weights.shape(), &[9, 9]);
    for w in map.weights.data() {
        assert_abs_diff_eq!(*w, 1.0 / 9.0, epsilon = 1e-15);
    }
}

#[test]
fn attention_rows_are_positive_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..10 {
        let (model, _) = random_model(config(3, 3, 10), 3, 3, seed);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..2.0)).collect();
        let map = model.window_attention(&x).unwrap();
        for s in map.row_sums() {
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!(map.weights.data().iter().all(|w| *w > 0.0));
    }
}

#[test]
fn attention_projection_of_wrong_width_is_config_error() {
    let (model, _) = random_model(config(3, 3, 6), 3, 3, 2);
    let mut g = Graph::new();
    let vars = ParamVars::register(&mut g, &model.params, false);
    let x = g.constant(Tensor::matrix(1, 6, vec![0.5; 6]).unwrap());
    let err = window_attention(&mut g, x, &vars, 5).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn zero_encoder_gives_zero_hidden() {
    let (mut model, cube) = random_model(config(3, 3, 6), 3, 3, 4);
    model.params.encoder = Tensor::zeros(&[3, 6]);
    model.params.bn_shift = Tensor::zeros(&[3]);
    let window = extract_window(&cube, 1, 1, 3, Padding::Reflect).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = model.encode(&window, Mode::Infer, &mut rng).unwrap();
    assert_eq!(h.shape(), &[3, 9]);
    assert!(h.data().iter().all(|v| *v == 0.0));
    let h = model.encode(&window, Mode::Train, &mut rng).unwrap();
    assert!(h.data().iter().all(|v| *v == 0.0));
}

#[test]
fn inference_encoding_ignores_dropout_rate() {
    let (mut model, cube) = random_model(config(3, 3, 6), 3, 3, 4);
    let window = extract_window(&cube, 0, 2, 3, Padding::Reflect).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = model.encode(&window, Mode::Infer, &mut rng).unwrap();
    model.config.dropout = 0.7;
    let b = model.encode(&window, Mode::Infer, &mut rng).unwrap();
    assert_eq!(a, b);
}

#[test]
fn encoding_matches_hand_evaluation() {
    let cfg = config(1, 2, 3);
    let (mut model, _) = random_model(cfg, 1, 1, 0);
    model.params.encoder = Tensor::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.3, 0.3, -1.0]]).unwrap();
    model.params.bn_scale = Tensor::vector(vec![2.0, 0.5]);
    model.params.bn_shift = Tensor::vector(vec![0.1, -0.2]);
    model.params.bn_running_mean = Tensor::vector(vec![0.4, -1.0]);
    model.params.bn_running_var = Tensor::vector(vec![4.0, 0.25]);
    let cube = HsiCube::new(1, 1, 3, vec![0.6, 0.2, 0.8]).unwrap();
    let window = extract_window(&cube, 0, 0, 1, Padding::Reflect).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = model.encode(&window, Mode::Infer, &mut rng).unwrap();
    // z = (0.6 - 0.4 + 0.4, 0.18 + 0.06 - 0.8) = (0.6, -0.56)
    let e0 = 2.0 * (0.6 - 0.4) / (4.0 + BN_EPS).sqrt() + 0.1;
    let e1 = 0.5 * (-0.56 + 1.0) / (0.25 + BN_EPS).sqrt() - 0.2;
    assert_abs_diff_eq!(h.data()[0], e0.max(0.0), epsilon = 1e-14);
    assert_abs_diff_eq!(h.data()[1], e1.max(0.0), epsilon = 1e-14);
}

fn attention_map(weights: Tensor) -> AttentionMap {
    AttentionMap { weights }
}

#[test]
fn identity_attention_sums_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_tensor(&[3, 9], 0.0, 1.0, &mut rng);
    let folded = fold_window(&attention_map(Tensor::identity(9)), &h).unwrap();
    for e in 0..3 {
        let expect: f64 = (0..9).map(|t| h.at(e, t)).sum();
        assert_abs_diff_eq!(folded[e], expect, epsilon = 1e-14);
    }
}

#[test]
fn single_slot_fold_is_the_column() {
    let h = Tensor::matrix(4, 1, vec![0.1, 0.7, 0.0, 0.3]).unwrap();
    let folded = fold_window(&attention_map(Tensor::full(&[1, 1], 1.0)), &h).unwrap();
    assert_eq!(folded, vec![0.1, 0.7, 0.0, 0.3]);
}

#[test]
fn uniform_attention_fold_equals_column_sum_by_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_tensor(&[4, 25], 0.0, 1.0, &mut rng);
    let d = Tensor::full(&[25, 25], 1.0 / 25.0);
    let folded = fold_window(&attention_map(d.clone()), &h).unwrap();
    for e in 0..4 {
        let mut expect = 0.0;
        for slot in 0..25 {
            for src in 0..25 {
                expect += h.at(e, src) * d.at(slot, src);
            }
        }
        let plain: f64 = (0..25).map(|t| h.at(e, t)).sum();
        assert_abs_diff_eq!(folded[e], expect, epsilon = 1e-12);
        assert_abs_diff_eq!(folded[e], plain, epsilon = 1e-12);
    }
}

#[test]
fn normalization_examples() {
    let s = normalize_vector(&[2.0, 3.0, 5.0], 1e-9).unwrap();
    for (a, b) in s.iter().zip([0.2, 0.3, 0.5]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
    assert_eq!(normalize_vector(&[0.0; 4], 1e-9).unwrap(), vec![0.0; 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let v: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..3.0)).collect();
        let norm: f64 = v.iter().sum();
        let total: f64 = normalize_vector(&v, 1e-9).unwrap().iter().sum();
        assert_abs_diff_eq!(total, norm / (norm + 1e-9), epsilon = 1e-14);
    }
}

#[test]
fn decoder_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (model, _) = random_model(config(3, 4, 7), 3, 3, 6);
    let w = &model.params.decoder;
    for k in 0..4 {
        let mut s = vec![0.0; 4];
        s[k] = 1.0;
        let x = model.decode(&s).unwrap();
        for b in 0..7 {
            assert_eq!(x[b], w.at(b, k));
        }
    }
    assert_eq!(model.decode(&[0.0; 4]).unwrap(), vec![0.0; 7]);
    for _ in 0..20 {
        let s: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = model.decode(&s).unwrap();
        for b in 0..7 {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += w.at(b, k) * s[k];
            }
            assert_abs_diff_eq!(x[b], acc, epsilon = 1e-14);
        }
    }
}

#[test]
fn loss_examples() {
    let x = [0.3, 0.5, 0.2, 0.9];
    let scaled: Vec<f64> = x.iter().map(|v| 2.5 * v).collect();
    let l = pixel_loss(&x, &scaled, &[0.0, 1.0, 0.0], 12.0, 2e-3).unwrap();
    assert_abs_diff_eq!(l, 0.002, epsilon = 1e-12);
    let l = pixel_loss(&[1.0, 0.0], &[0.0, 3.0], &[0.5, 0.5], 12.0, 0.0).unwrap();
    assert_abs_diff_eq!(l, 12.0 * FRAC_PI_2, epsilon = 1e-12);
    assert!(pixel_loss(&x, &[0.0; 4], &[0.0; 3], 12.0, 2e-3).is_err());
}

#[test]
fn batch_loss_is_mean_of_pixel_losses() {
    let mut g = Graph::new();
    let x = Tensor::from_rows(&[vec![0.3, 0.5, 0.2], vec![0.1, 0.1, 0.8]]).unwrap();
    let xh = Tensor::from_rows(&[vec![0.2, 0.6, 0.2], vec![0.3, 0.1, 0.5]]).unwrap();
    let s = Tensor::from_rows(&[vec![0.4, 0.6], vec![0.9, 0.1]]).unwrap();
    let (xv, xhv, sv) = (g.constant(x.clone()), g.constant(xh.clone()), g.constant(s.clone()));
    let terms = loss(&mut g, xv, xhv, sv, 12.0, 2e-3).unwrap();
    let expect = (0..2)
        .map(|i| pixel_loss(x.row(i), xh.row(i), s.row(i), 12.0, 2e-3).unwrap())
        .sum::<f64>()
        / 2.0;
    assert_abs_diff_eq!(g.value(terms.value).item().unwrap(), expect, epsilon = 1e-14);
    assert_eq!(terms.degenerate, 0);
}

#[test]
fn zero_abundance_rows_are_counted_not_scored() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_rows(&[vec![0.3, 0.5], vec![0.1, 0.1]]).unwrap());
    let xh = g.constant(Tensor::from_rows(&[vec![0.2, 0.6], vec![0.0, 0.0]]).unwrap());
    let s = g.constant(Tensor::from_rows(&[vec![0.4, 0.6], vec![0.0, 0.0]]).unwrap());
    let terms = loss(&mut g, x, xh, s, 12.0, 2e-3).unwrap();
    assert_eq!(terms.degenerate, 1);
    let expect = pixel_loss(&[0.3, 0.5], &[0.2, 0.6], &[0.4, 0.6], 12.0, 2e-3).unwrap();
    assert_abs_diff_eq!(g.value(terms.value).item().unwrap(), expect, epsilon = 1e-14);
}

#[test]
fn published_hyperparameters_are_defaults() {
    let c = ModelConfig::default();
    assert_eq!((c.lambda1, c.lambda2), (12.0, 2e-3));
    assert_eq!((c.batch_size, c.epochs), (128, 300));
    assert_eq!((c.lr_encoder, c.lr_decoder), (1e-3, 1e-5));
    assert_eq!(c.window, 3);
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    for seed in 0..3 {
        let (model, batch) = toy_instance(seed);
        for (id, err) in common::group_gradient_errors(&model, &batch) {
            assert!(err < 1e-4, "seed {seed} {id:?}: relative error {err:e}");
        }
    }
}

fn learnable(params: &ModelParams) -> Vec<Tensor> {
    ParamId::ALL.iter().map(|id| params.get(*id).clone()).collect()
}

#[test]
fn zero_loss_weights_leave_parameters_unchanged() {
    let (cube, _) = small_scene(1);
    let cfg = ModelConfig {
        endmembers: 3,
        lambda1: 0.0,
        lambda2: 0.0,
        epochs: 3,
        batch_size: 64,
        ..ModelConfig::default()
    };
    let init = initialize(&cube, &cfg, Architecture::Sawu).unwrap();
    let out = train_model(&cube, init.clone()).unwrap();
    assert!(out.loss_history.iter().all(|l| *l == 0.0));
    assert_eq!(learnable(&out.model.params), learnable(&init.params));
}

#[test]
fn training_reduces_loss_and_stays_finite() {
    let (cube, _) = small_scene(2);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 40,
        batch_size: 32,
        ..ModelConfig::default()
    };
    let out = train(&cube, &cfg).unwrap();
    assert_eq!(out.loss_history.len(), 40);
    assert!(out.loss_history.iter().all(|l| l.is_finite()));
    assert!(out.loss_history.last().unwrap() < &out.loss_history[0]);
    assert!(out.model.params.decoder.data().iter().all(|v| *v >= 0.0));
}

#[test]
fn training_is_bitwise_deterministic() {
    let (cube, _) = small_scene(3);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 5,
        batch_size: 50,
        seed: 17,
        ..ModelConfig::default()
    };
    let a = train(&cube, &cfg).unwrap();
    let b = train(&cube, &cfg).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.loss_history), bits(&b.loss_history));
    assert_eq!(checkpoint_bytes(&a.model), checkpoint_bytes(&b.model));
}

#[test]
fn inference_lies_on_the_simplex() {
    let (cube, _) = small_scene(4);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 5,
        batch_size: 64,
        ..ModelConfig::default()
    };
    let out = train(&cube, &cfg).unwrap();
    let inf = infer_abundances(&out.model, &cube).unwrap();
    let mut zeros = 0;
    for px in inf.abundances.values().chunks(3) {
        assert!(px.iter().all(|v| *v >= 0.0));
        let total: f64 = px.iter().sum();
        if total == 0.0 {
            zeros += 1;
        } else {
            assert!((total - 1.0).abs() < 1e-6);
        }
    }
    assert_eq!(zeros, inf.degenerate);
    let again = infer_abundances(&out.model, &cube).unwrap();
    assert_eq!(inf, again);
}

#[test]
fn single_pixel_window_ignores_neighbours() {
    let (cube, _) = small_scene(5);
    let cfg = ModelConfig {
        window: 1,
        endmembers: 3,
        epochs: 2,
        batch_size: 64,
        ..ModelConfig::default()
    };
    let out = train(&cube, &cfg).unwrap();
    let before = infer_abundances(&out.model, &cube).unwrap();
    let mut values = cube.values().to_vec();
    let l = cube.bands();
    for v in &mut values[l..2 * l] {
        *v *= 3.0;
    }
    let changed = HsiCube::new(cube.height(), cube.width(), l, values).unwrap();
    let after = infer_abundances(&out.model, &changed).unwrap();
    assert_eq!(before.abundances.pixel_at(0), after.abundances.pixel_at(0));
    assert_eq!(before.abundances.pixel_at(2), after.abundances.pixel_at(2));
    assert_ne!(before.abundances.pixel_at(1), after.abundances.pixel_at(1));
}

#[test]
fn trained_abundances_beat_untrained() {
    let (cube, gt) = generate_synthetic(&SyntheticSpec {
        height: 32,
        width: 32,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let cfg = ModelConfig {
        epochs: 30,
        ..ModelConfig::default()
    };
    let init = initialize(&cube, &cfg, Architecture::Sawu).unwrap();
    let score = |m: &Model| {
        let inf = infer_abundances(m, &cube).unwrap();
        let perm = evaluate(&m.params.endmembers(), &gt.endmembers, None).unwrap().permutation;
        rmse_report(&inf.abundances, &gt.abundances, &perm).unwrap().0
    };
    let before = score(&init);
    let out = train_model(&cube, init).unwrap();
    let after = score(&out.model);
    for (b, a) in before.iter().zip(&after) {
        assert!(a < b, "trained RMSE {after:?} not below untrained {before:?}");
    }
}

#[test]
fn endmembers_start_at_extraction_and_stay_nonnegative() {
    let (cube, _) = small_scene(6);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 3,
        batch_size: 64,
        seed: 2,
        ..ModelConfig::default()
    };
    let init = initialize(&cube, &cfg, Architecture::Sawu).unwrap();
    assert_eq!(init.params.endmembers(), vca(&cube, 3, 2).unwrap().endmembers);
    let out = train_model(&cube, init).unwrap();
    assert!(out.model.params.endmembers().data().iter().all(|v| *v >= 0.0));
}

#[test]
fn checkpoint_round_trips_bit_exact() {
    let (cube, _) = small_scene(7);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 2,
        batch_size: 64,
        pixel_attention: false,
        ..ModelConfig::default()
    };
    let out = train(&cube, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&path, &out.model).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, out.model);
    assert_eq!(checkpoint_bytes(&back), checkpoint_bytes(&out.model));

    let bytes = checkpoint_bytes(&out.model);
    assert!(model_from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(model_from_bytes(&wrong).is_err());
    let mut longer = bytes;
    longer.push(0);
    assert!(model_from_bytes(&longer).is_err());
}

#[test]
fn pixel_attention_switch_only_changes_attention() {
    let (model, cube) = random_model(config(3, 3, 8), 4, 4, 12);
    let mut plain = model.clone();
    plain.config.pixel_attention = false;
    let batch = WindowBatch::gather(&cube, &[0, 5, 15], 3, Padding::Reflect).unwrap();
    let run = |m: &Model| {
        let mut g = Graph::new();
        let vars = ParamVars::register(&mut g, &m.params, false);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = m.forward(&mut g, &vars, &batch, Mode::Infer, &mut rng).unwrap();
        (
            g.value(f.hidden).clone(),
            g.value(f.attention.unwrap()).clone(),
            g.value(f.abundances).clone(),
        )
    };
    let (h_a, d_a, s_a) = run(&model);
    let (h_b, d_b, s_b) = run(&plain);
    assert_eq!(h_a, h_b);
    assert_ne!(d_a, d_b);
    for (d, s) in [(&d_a, &s_a), (&d_b, &s_b)] {
        for b in 0..3 {
            let rows = 9;
            let map = AttentionMap {
                weights: Tensor::matrix(rows, 9, d.data()[b * 81..(b + 1) * 81].to_vec()).unwrap(),
            };
            let h = Tensor::matrix(9, 3, h_a.data()[b * 27..(b + 1) * 27].to_vec())
                .unwrap()
                .transposed()
                .unwrap();
            let folded = fold_window(&map, &h).unwrap();
            let expect = normalize_vector(&folded, model.config.eps).unwrap();
            for e in 0..3 {
                assert_abs_diff_eq!(s.at(b, e), expect[e], epsilon = 1e-14);
            }
        }
    }
}

#[test]
fn baseline_autoencoder_is_deterministic_and_on_simplex() {
    let (cube, _) = small_scene(8);
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 4,
        batch_size: 64,
        ..ModelConfig::default()
    };
    let a = baseline_ae_train(&cube, &cfg).unwrap();
    let b = baseline_ae_train(&cube, &cfg).unwrap();
    assert_eq!(a.loss_history, b.loss_history);
    assert_eq!(a.model.architecture, Architecture::Baseline);
    assert_eq!(a.model.input_window(), 1);
    let pixels: Vec<usize> = (0..cube.pixel_count()).collect();
    let batch = WindowBatch::gather(&cube, &pixels, 1, Padding::Reflect).unwrap();
    let mut g = Graph::new();
    let vars = ParamVars::register(&mut g, &a.model.params, false);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let f = a.model.forward(&mut g, &vars, &batch, Mode::Infer, &mut rng).unwrap();
    let (s, folded) = (g.value(f.abundances), g.value(f.folded));
    for (px, raw) in s.data().chunks(3).zip(folded.data().chunks(3)) {
        assert!(px.iter().all(|v| *v >= 0.0));
        let norm: f64 = raw.iter().sum();
        let total: f64 = px.iter().sum();
        assert_abs_diff_eq!(total, norm / (norm + cfg.eps), epsilon = 1e-12);
    }
    let inf = infer_abundances(&a.model, &cube).unwrap();
    assert_eq!(inf.abundances.values(), s.data());
}

#[test]
fn band_mismatch_is_config_error() {
    let (cube, _) = small_scene(9);
    let other = generate_synthetic(&SyntheticSpec {
        endmembers: 3,
        bands: 20,
        height: 8,
        width: 8,
        snr_db: 30.0,
        seed: 0,
    })
    .unwrap()
    .0;
    let cfg = ModelConfig {
        endmembers: 3,
        epochs: 1,
        ..ModelConfig::default()
    };
    let model = initialize(&cube, &cfg, Architecture::Sawu).unwrap();
    assert!(matches!(infer_abundances(&model, &other), Err(Error::Config(_))));
    assert!(matches!(train_model(&other, model), Err(Error::Config(_))));
}
