//! Linear-mixture scenes with known endmembers and abundances.
//!
//! Endmembers are smooth positive spectra built from a few Gaussian bumps on
//! a baseline. Abundances start as Dirichlet(1) draws, are smoothed with a
//! 3×3 mean filter (reflect borders) and renormalized, and any pixel whose
//! largest fraction exceeds [`MAX_FRACTION`] is pulled toward the uniform
//! mixture until it no longer does. White Gaussian noise is scaled so the
//! realised signal-to-noise ratio equals the requested one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{AbundanceMap, GroundTruth, HsiCube, Padding};
use crate::error::{Error, Result};
use crate::tensor::{sad, Tensor};

/// Largest abundance any synthetic pixel may carry.
pub const MAX_FRACTION: f64 = 0.8;

/// Minimum pairwise spectral angle between generated endmembers.
const MIN_ENDMEMBER_ANGLE: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub endmembers: usize,
    pub bands: usize,
    pub height: usize,
    pub width: usize,
    /// Target SNR in dB; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            endmembers: 4,
            bands: 100,
            height: 64,
            width: 64,
            snr_db: 30.0,
            seed: 0,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(HsiCube, GroundTruth)> {
    let SyntheticSpec {
        endmembers: p,
        bands: l,
        height: h,
        width: w,
        snr_db,
        seed,
    } = *spec;
    if p < 2 || l <= p || h * w == 0 {
        return Err(Error::Usage(format!(
            "synthetic scene needs P ≥ 2, L > P and at least one pixel (P={p}, L={l}, {h}×{w})"
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Usage(format!("invalid SNR {snr_db}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let endmembers = smooth_endmembers(p, l, &mut rng)?;
    let abundances = mixed_abundances(h, w, p, &mut rng)?;
    let gt = GroundTruth::new(endmembers, abundances)?;
    let clean = gt.mixtures();

    let noisy = if snr_db.is_infinite() {
        clean
    } else {
        let signal = mean_square(&clean);
        let mut noise: Vec<f64> = (0..clean.len()).map(|_| rng.sample(StandardNormal)).collect();
        let target = signal / 10f64.powf(snr_db / 10.0);
        let scale = (target / mean_square(&noise)).sqrt();
        noise.iter_mut().for_each(|n| *n *= scale);
        clean.iter().zip(&noise).map(|(c, n)| c + n).collect()
    };
    Ok((HsiCube::new(h, w, l, noisy)?, gt))
}

/// `10·log10(P_signal / P_noise)` of a noisy cube against its clean version.
pub fn measured_snr_db(clean: &[f64], noisy: &[f64]) -> f64 {
    let noise: Vec<f64> = clean.iter().zip(noisy).map(|(c, n)| n - c).collect();
    10.0 * (mean_square(clean) / mean_square(&noise)).log10()
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

fn smooth_endmembers(p: usize, l: usize, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    let mut spectra: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut attempts = 0;
    while spectra.len() < p {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Degenerate("could not draw distinct endmembers".into()));
        }
        let s = smooth_spectrum(l, rng);
        let distinct = spectra
            .iter()
            .all(|o| sad(o, &s).is_ok_and(|a| a >= MIN_ENDMEMBER_ANGLE));
        if distinct {
            spectra.push(s);
        }
    }
    let mut data = vec![0.0; l * p];
    for (k, s) in spectra.iter().enumerate() {
        for (b, v) in s.iter().enumerate() {
            data[b * p + k] = *v;
        }
    }
    Tensor::matrix(l, p, data)
}

fn smooth_spectrum(l: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let span = l as f64;
    let baseline = rng.random_range(0.05..0.3);
    let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(2..=5))
        .map(|_| {
            (
                rng.random_range(-0.1 * span..1.1 * span),
                rng.random_range(span / 20.0..span / 4.0),
                rng.random_range(0.1..0.8),
            )
        })
        .collect();
    let mut s: Vec<f64> = (0..l)
        .map(|b| {
            let x = b as f64;
            baseline
                + bumps
                    .iter()
                    .map(|(c, width, amp)| amp * (-(x - c).powi(2) / (2.0 * width * width)).exp())
                    .sum::<f64>()
        })
        .collect();
    let max = s.iter().copied().fold(0.0, f64::max);
    if max > 0.95 {
        s.iter_mut().for_each(|v| *v *= 0.95 / max);
    }
    s
}

fn mixed_abundances(h: usize, w: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<AbundanceMap> {
    let mut raw = Vec::with_capacity(h * w * p);
    for _ in 0..h * w {
        let draws: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        raw.extend(draws.iter().map(|d| d / total));
    }

    let pad = Padding::Reflect;
    let mut smooth = vec![0.0; h * w * p];
    for i in 0..h {
        for j in 0..w {
            let dst = &mut smooth[(i * w + j) * p..(i * w + j + 1) * p];
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    let r = pad.resolve(i as isize + di, h);
                    let c = pad.resolve(j as isize + dj, w);
                    for (d, v) in dst.iter_mut().zip(&raw[(r * w + c) * p..(r * w + c + 1) * p]) {
                        *d += v;
                    }
                }
            }
        }
    }

    let uniform = 1.0 / p as f64;
    for px in smooth.chunks_mut(p) {
        let total: f64 = px.iter().sum();
        px.iter_mut().for_each(|v| *v /= total);
        let top = px.iter().copied().fold(0.0, f64::max);
        if top > MAX_FRACTION {
            let t = (MAX_FRACTION - uniform) / (top - uniform);
            px.iter_mut().for_each(|v| *v = t * *v + (1.0 - t) * uniform);
        }
    }
    AbundanceMap::new(h, w, p, smooth)
}
