use itertools::Itertools;

use crate::error::{Error, Result};
use crate::tensor::{sad, Tensor};

/// Largest `P` solved by trying every permutation.
pub const EXHAUSTIVE_LIMIT: usize = 8;

fn column(m: &Tensor, k: usize) -> Vec<f64> {
    (0..m.rows()).map(|b| m.at(b, k)).collect()
}

/// `cost[k][j]` = SAD between ground-truth column `k` and estimated column `j`.
pub fn sad_cost_matrix(est: &Tensor, gt: &Tensor) -> Result<Vec<Vec<f64>>> {
    if est.ndim() != 2 || gt.ndim() != 2 || est.shape() != gt.shape() {
        return Err(Error::Usage(format!(
            "endmember matrices differ in shape: estimated {:?}, ground truth {:?}",
            est.shape(),
            gt.shape()
        )));
    }
    let p = gt.cols();
    let est_cols: Vec<Vec<f64>> = (0..p).map(|j| column(est, j)).collect();
    (0..p)
        .map(|k| {
            let g = column(gt, k);
            est_cols.iter().map(|e| sad(&g, e)).collect()
        })
        .collect()
}

/// Assignment of estimated columns to ground-truth endmembers minimising
/// the total SAD; `perm[k]` is the estimated column for endmember `k`.
pub fn match_endmembers(est: &Tensor, gt: &Tensor) -> Result<Vec<usize>> {
    let cost = sad_cost_matrix(est, gt)?;
    Ok(if cost.len() <= EXHAUSTIVE_LIMIT {
        exhaustive(&cost)
    } else {
        hungarian(&cost)
    })
}

fn exhaustive(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut best = ((0..n).collect::<Vec<_>>(), f64::INFINITY);
    for perm in (0..n).permutations(n) {
        let total: f64 = perm.iter().enumerate().map(|(k, &j)| cost[k][j]).sum();
        if total < best.1 {
            best = (perm, total);
        }
    }
    best.0
}

/// Minimum-cost perfect matching of a square cost matrix (shortest
/// augmenting paths with row and column potentials, `O(n³)`).
/// Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based with a virtual column 0, as in the classical formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    assign
}
