//! Loop and brute-force reference implementations, plus randomized
//! comparisons against the library.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sawu_core::data::{extract_window, HsiCube, Padding};
use sawu_core::metrics::{match_endmembers, sad_cost_matrix};
use sawu_core::model::{fold_window, AttentionMap};
use sawu_core::tensor::{matmul, softmax_rows, Tensor};

use super::{random_cube, random_tensor};

/// Mirror repeatedly off both edges until inside `0..n`.
pub fn reflect(mut idx: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    loop {
        if idx < 0 {
            idx = -idx;
        } else if idx >= n {
            idx = 2 * (n - 1) - idx;
        } else {
            return idx as usize;
        }
    }
}

pub fn window(cube: &HsiCube, i: usize, j: usize, k: usize) -> Vec<f64> {
    let half = (k / 2) as isize;
    let mut out = Vec::new();
    for di in -half..=half {
        for dj in -half..=half {
            let r = reflect(i as isize + di, cube.height());
            let c = reflect(j as isize + dj, cube.width());
            for b in 0..cube.bands() {
                out.push(cube.values()[(r * cube.width() + c) * cube.bands() + b]);
            }
        }
    }
    out
}

pub fn matmul_loops(a: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            for t in 0..k {
                out[i * n + j] += a.at(i, t) * b.at(t, j);
            }
        }
    }
    out
}

/// `Σ_slot Σ_src h[e][src]·D[slot][src]`.
pub fn fold_loops(d: &Tensor, h: &Tensor) -> Vec<f64> {
    let area = d.rows();
    (0..h.rows())
        .map(|e| {
            let mut total = 0.0;
            for slot in 0..area {
                for src in 0..area {
                    total += h.at(e, src) * d.at(slot, src);
                }
            }
            total
        })
        .collect()
}

/// Cost of the cheapest assignment over every permutation.
pub fn best_assignment_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(k, &j)| cost[k][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Number of cases run and the worst absolute deviation seen.
#[derive(Debug, Clone, Copy)]
pub struct OracleRun {
    pub cases: usize,
    pub worst: f64,
}

pub fn run_matmul(cases: usize, seed: u64) -> OracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (m, k, n) = (rng.random_range(1..9), rng.random_range(1..9), rng.random_range(1..9));
        let a = random_tensor(&[m, k], -2.0, 2.0, &mut rng);
        let b = random_tensor(&[k, n], -2.0, 2.0, &mut rng);
        let got = matmul(&a, &b).unwrap();
        for (x, y) in got.data().iter().zip(matmul_loops(&a, &b)) {
            worst = worst.max((x - y).abs());
        }
    }
    OracleRun { cases, worst }
}

pub fn run_windows(cases: usize, seed: u64) -> OracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let (h, w, l) = (rng.random_range(1..7), rng.random_range(1..7), rng.random_range(2..5));
        let k = 2 * rng.random_range(0..5) + 1;
        let cube = random_cube(h, w, l, seed.wrapping_mul(1000) + case as u64);
        let (i, j) = (rng.random_range(0..h), rng.random_range(0..w));
        let got = extract_window(&cube, i, j, k, Padding::Reflect).unwrap();
        let expect = window(&cube, i, j, k);
        assert_eq!(got.pixels.len(), expect.len());
        for (x, y) in got.pixels.iter().zip(&expect) {
            worst = worst.max((x - y).abs());
        }
    }
    OracleRun { cases, worst }
}

pub fn run_folds(cases: usize, seed: u64) -> OracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let k = 2 * rng.random_range(0..4) + 1;
        let p = rng.random_range(1..7);
        let area = k * k;
        let logits = random_tensor(&[area, area], -3.0, 3.0, &mut rng);
        let d = softmax_rows(&logits).unwrap();
        let h = random_tensor(&[p, area], 0.0, 1.0, &mut rng);
        let got = fold_window(&AttentionMap { weights: d.clone() }, &h).unwrap();
        for (x, y) in got.iter().zip(fold_loops(&d, &h)) {
            worst = worst.max((x - y).abs());
        }
    }
    OracleRun { cases, worst }
}

/// Worst excess of the library's matching cost over the brute-force optimum.
pub fn run_matching(cases: usize, seed: u64, max_p: usize) -> OracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let p = rng.random_range(1..=max_p);
        let l = rng.random_range(p + 1..p + 12);
        let gt = random_tensor(&[l, p], 0.01, 1.0, &mut rng);
        let est = random_tensor(&[l, p], 0.01, 1.0, &mut rng);
        let perm = match_endmembers(&est, &gt).unwrap();
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..p).collect::<Vec<_>>());
        let cost = sad_cost_matrix(&est, &gt).unwrap();
        let got: f64 = perm.iter().enumerate().map(|(k, &j)| cost[k][j]).sum();
        worst = worst.max(got - best_assignment_cost(&cost));
    }
    OracleRun { cases, worst }
}
