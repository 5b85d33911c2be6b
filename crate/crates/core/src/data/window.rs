use serde::{Deserialize, Serialize};

use super::HsiCube;
use crate::error::{Error, Result};

/// How coordinates outside the cube are mapped back inside.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Mirror about the edge pixel without repeating it: `-1 → 1`.
    #[default]
    Reflect,
    /// Repeat the edge pixel: `-1 → 0`.
    Replicate,
}

impl Padding {
    /// Maps a possibly out-of-range coordinate into `0..n`.
    pub fn resolve(self, idx: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            Padding::Replicate => idx.clamp(0, n - 1) as usize,
            Padding::Reflect => {
                if n == 1 {
                    return 0;
                }
                let period = 2 * (n - 1);
                let m = idx.rem_euclid(period);
                (if m < n { m } else { period - m }) as usize
            }
        }
    }
}

/// A `K×K` neighbourhood of pixel spectra, stored as `K²×L` rows with
/// row `p·K + q` holding pixel `(i + p − K/2, j + q − K/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub center: (usize, usize),
    pub size: usize,
    pub bands: usize,
    pub pixels: Vec<f64>,
}

impl Window {
    pub fn row(&self, slot: usize) -> &[f64] {
        &self.pixels[slot * self.bands..(slot + 1) * self.bands]
    }

    /// Index of the centre pixel's row.
    pub fn center_slot(&self) -> usize {
        (self.size * self.size - 1) / 2
    }
}

pub(crate) fn check_window_size(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::Usage(format!("window size must be odd and positive, got {k}")));
    }
    Ok(())
}

pub fn extract_window(cube: &HsiCube, i: usize, j: usize, k: usize, padding: Padding) -> Result<Window> {
    check_window_size(k)?;
    if i >= cube.height() || j >= cube.width() {
        return Err(Error::Usage(format!(
            "pixel ({i}, {j}) outside {}×{} cube",
            cube.height(),
            cube.width()
        )));
    }
    let mut pixels = vec![0.0; k * k * cube.bands()];
    fill_window(cube, i, j, k, padding, &mut pixels);
    Ok(Window {
        center: (i, j),
        size: k,
        bands: cube.bands(),
        pixels,
    })
}

/// Writes the `K²×L` window around `(i, j)` into `out`.
pub(crate) fn fill_window(cube: &HsiCube, i: usize, j: usize, k: usize, padding: Padding, out: &mut [f64]) {
    let half = (k / 2) as isize;
    let l = cube.bands();
    for p in 0..k {
        let r = padding.resolve(i as isize + p as isize - half, cube.height());
        for q in 0..k {
            let c = padding.resolve(j as isize + q as isize - half, cube.width());
            let slot = p * k + q;
            out[slot * l..(slot + 1) * l].copy_from_slice(cube.pixel(r, c));
        }
    }
}
