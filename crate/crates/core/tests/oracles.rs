mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sawu_core::data::Padding;
use sawu_core::metrics::{hungarian, rmse_report, sad_report};
use sawu_core::data::AbundanceMap;
use sawu_core::tensor::Tensor;

use common::oracle;

#[test]
fn reflect_oracle_agrees_with_padding() {
    for n in 1..8 {
        for idx in -20isize..30 {
            assert_eq!(Padding::Reflect.resolve(idx, n), oracle::reflect(idx, n), "idx {idx}, n {n}");
        }
    }
}

#[test]
fn window_extraction_matches_loops() {
    let run = oracle::run_windows(300, 1);
    assert_eq!(run.worst, 0.0);
}

#[test]
fn fold_matches_loops() {
    let run = oracle::run_folds(300, 2);
    assert!(run.worst < 1e-12, "{run:?}");
}

#[test]
fn matmul_matches_loops() {
    let run = oracle::run_matmul(300, 3);
    assert!(run.worst < 1e-12, "{run:?}");
}

#[test]
fn matching_is_optimal_up_to_six() {
    let run = oracle::run_matching(300, 4, 6);
    assert!(run.worst <= 1e-12, "{run:?}");
}

#[test]
fn hungarian_matches_brute_force_on_larger_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = 9;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| common::random_tensor(&[n], 0.0, 1.0, &mut rng).into_data())
            .collect();
        let assign = hungarian(&cost);
        let got: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert!((got - oracle::best_assignment_cost(&cost)).abs() < 1e-12);
    }
}

fn permute_columns(m: &Tensor, order: &[usize]) -> Tensor {
    let rows: Vec<Vec<f64>> = (0..m.rows())
        .map(|i| order.iter().map(|&j| m.at(i, j)).collect())
        .collect();
    Tensor::from_rows(&rows).unwrap()
}

fn permute_map(m: &AbundanceMap, order: &[usize]) -> AbundanceMap {
    let p = m.endmembers();
    let values = m
        .values()
        .chunks(p)
        .flat_map(|px| order.iter().map(|&j| px[j]).collect::<Vec<_>>())
        .collect();
    AbundanceMap::new(m.height(), m.width(), p, values).unwrap()
}

proptest! {
    #[test]
    fn scores_invariant_under_shared_permutation(
        seed in any::<u64>(),
        order in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = common::random_tensor(&[7, 4], 0.01, 1.0, &mut rng);
        let est = common::random_tensor(&[7, 4], 0.01, 1.0, &mut rng);
        let gt_ab = AbundanceMap::new(2, 3, 4, common::random_tensor(&[24], 0.0, 1.0, &mut rng).into_data()).unwrap();
        let est_ab = AbundanceMap::new(2, 3, 4, common::random_tensor(&[24], 0.0, 1.0, &mut rng).into_data()).unwrap();

        // relabel both estimate and ground truth by `order`; the pairing is carried along
        let gt_p = permute_columns(&gt, &order);
        let est_p = permute_columns(&est, &order);
        let mut perm_p = vec![0; 4];
        for (k, &ok) in order.iter().enumerate() {
            perm_p[k] = order.iter().position(|&x| x == perm[ok]).unwrap();
        }
        let (sad_a, avg_a) = sad_report(&est, &gt, &perm).unwrap();
        let (sad_b, avg_b) = sad_report(&est_p, &gt_p, &perm_p).unwrap();
        for (k, &ok) in order.iter().enumerate() {
            prop_assert!((sad_b[k] - sad_a[ok]).abs() < 1e-15);
        }
        prop_assert!((avg_a - avg_b).abs() < 1e-12);
        prop_assert!((avg_a - sad_a.iter().sum::<f64>() / 4.0).abs() < 1e-12);

        let (r_a, ra_avg) = rmse_report(&est_ab, &gt_ab, &perm).unwrap();
        let (r_b, rb_avg) = rmse_report(&permute_map(&est_ab, &order), &permute_map(&gt_ab, &order), &perm_p).unwrap();
        for (k, &ok) in order.iter().enumerate() {
            prop_assert!((r_b[k] - r_a[ok]).abs() < 1e-15);
        }
        prop_assert!((ra_avg - rb_avg).abs() < 1e-12);
    }
}
