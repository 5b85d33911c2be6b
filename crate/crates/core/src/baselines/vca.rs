//! Vertex component analysis.
//!
//! Pixels are projected onto a `P`-dimensional signal subspace, then `P`
//! times a random direction orthogonal to the endmembers found so far is
//! drawn and the pixel with the largest absolute projection on it is taken
//! as the next endmember.
//!
//! When the estimated SNR is above `15 + 10·log10(P)` dB the data is
//! projected onto the top-`P` eigenvectors of the uncentred correlation
//! matrix and scaled projectively (`y = x / ⟨mean, x⟩`). Otherwise the
//! mean-removed data is projected onto `P − 1` principal components and a
//! constant coordinate equal to the largest projected norm is appended.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::HsiCube;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Endmembers picked by VCA and the pixels they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct VcaResult {
    /// `L×P`, column `k` is the spectrum of pixel `indices[k]`.
    pub endmembers: Tensor,
    /// Row-major linear pixel indices.
    pub indices: Vec<usize>,
}

/// Relative scale below which projections count as zero.
const DEGENERATE_TOL: f64 = 1e-12;

pub fn vca(cube: &HsiCube, p: usize, seed: u64) -> Result<VcaResult> {
    let (l, n) = (cube.bands(), cube.pixel_count());
    if p == 0 || p >= l {
        return Err(Error::Usage(format!("VCA needs 0 < P < L, got P={p}, L={l}")));
    }
    if n < p {
        return Err(Error::Usage(format!("VCA needs at least {p} pixels, cube has {n}")));
    }
    let y = DMatrix::from_fn(l, n, |b, j| cube.pixel_at(j)[b]);
    let mean = y.column_mean();
    let spread = y
        .column_iter()
        .map(|c| (c - &mean).norm())
        .fold(0.0, f64::max);
    if spread <= DEGENERATE_TOL * mean.norm().max(1.0) {
        return Err(Error::Degenerate("all pixels are identical".into()));
    }

    let indices = if p == 1 {
        let u = top_eigenvectors(&(&y * y.transpose() / n as f64), 1);
        let proj = u.transpose() * &y;
        vec![argmax_abs(proj.row(0).iter().copied(), &[])]
    } else {
        let projected = project(&y, &mean, p);
        select_vertices(&projected, p, seed)?
    };

    let mut data = vec![0.0; l * p];
    for (k, &idx) in indices.iter().enumerate() {
        for (b, v) in cube.pixel_at(idx).iter().enumerate() {
            data[b * p + k] = *v;
        }
    }
    Ok(VcaResult {
        endmembers: Tensor::matrix(l, p, data)?,
        indices,
    })
}

/// Estimated SNR in dB from the signal-subspace and total powers.
fn estimate_snr(y: &DMatrix<f64>, mean: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    let (l, n) = (y.nrows() as f64, y.ncols() as f64);
    let p = x.nrows() as f64;
    let p_y = y.norm_squared() / n;
    let p_x = x.norm_squared() / n + mean.norm_squared();
    let noise = p_y - p_x;
    if noise <= DEGENERATE_TOL * p_y {
        return f64::INFINITY;
    }
    let signal = p_x - p / l * p_y;
    if signal <= 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (signal / noise).log10()
}

/// Projected data, `P×N`, ready for the vertex search.
fn project(y: &DMatrix<f64>, mean: &DVector<f64>, p: usize) -> DMatrix<f64> {
    let n = y.ncols();
    let mut centred = y.clone();
    for mut c in centred.column_iter_mut() {
        c -= mean;
    }
    let ud = top_eigenvectors(&(&centred * centred.transpose() / n as f64), p);
    let x_p = ud.transpose() * &centred;
    let snr = estimate_snr(y, mean, &x_p);
    let threshold = 15.0 + 10.0 * (p as f64).log10();

    if snr >= threshold {
        let u = top_eigenvectors(&(y * y.transpose() / n as f64), p);
        let x = u.transpose() * y;
        let u_mean = x.column_mean();
        let denom = u_mean.transpose() * &x;
        let scale = denom.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if denom.iter().all(|d| *d > DEGENERATE_TOL * scale) {
            let mut out = x;
            for (j, mut c) in out.column_iter_mut().enumerate() {
                c /= denom[j];
            }
            return out;
        }
    }

    let d = p - 1;
    let x = x_p.rows(0, d).into_owned();
    let c = x.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
    let mut out = DMatrix::zeros(p, n);
    out.rows_mut(0, d).copy_from(&x);
    out.row_mut(d).fill(c);
    out
}

fn select_vertices(y: &DMatrix<f64>, p: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::<f64>::zeros(p, p);
    a[(p - 1, 0)] = 1.0;
    let scale = y.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut indices = Vec::with_capacity(p);
    for i in 0..p {
        let w = DVector::from_fn(p, |_, _| rng.random::<f64>());
        let pinv = a
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Degenerate(format!("pseudo-inverse failed: {e}")))?;
        let mut f = &w - &a * (pinv * &w);
        let norm = f.norm();
        if norm <= DEGENERATE_TOL {
            return Err(Error::Degenerate("no direction orthogonal to chosen endmembers".into()));
        }
        f /= norm;
        let v = f.transpose() * y;
        let idx = argmax_abs(v.iter().copied(), &indices);
        if v[idx].abs() <= DEGENERATE_TOL * scale.max(1.0) {
            return Err(Error::Degenerate(format!(
                "data spans fewer than {p} independent directions"
            )));
        }
        indices.push(idx);
        a.set_column(i, &y.column(idx));
    }
    Ok(indices)
}

fn argmax_abs(values: impl Iterator<Item = f64>, skip: &[usize]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if skip.contains(&i) {
            continue;
        }
        if v.abs() > best.1 {
            best = (i, v.abs());
        }
    }
    best.0
}

/// Eigenvectors of a symmetric matrix for its `count` largest eigenvalues.
fn top_eigenvectors(m: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut out = DMatrix::zeros(m.nrows(), count);
    for (k, &i) in order.iter().take(count).enumerate() {
        out.set_column(k, &eig.eigenvectors.column(i));
    }
    out
}
