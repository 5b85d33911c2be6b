use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::window::{check_window_size, fill_window};
use super::{HsiCube, Padding};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Seeded shuffling and batch size for one training run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchPlan {
    pub seed: u64,
    pub batch_size: usize,
}

impl BatchPlan {
    pub fn new(seed: u64, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Usage("batch size must be positive".into()));
        }
        Ok(Self { seed, batch_size })
    }

    /// Permutation of `0..pixels` visited during `epoch`.
    pub fn visit_order(&self, pixels: usize, epoch: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64);
        let mut order: Vec<usize> = (0..pixels).collect();
        order.shuffle(&mut rng);
        order
    }

    pub fn batch_count(&self, pixels: usize) -> usize {
        pixels.div_ceil(self.batch_size)
    }
}

/// A batch of windows with their centre spectra.
#[derive(Clone, Debug)]
pub struct WindowBatch {
    /// Row-major linear pixel index of each window centre.
    pub pixels: Vec<usize>,
    /// `[B, K², L]` window spectra.
    pub windows: Tensor,
    /// `[B, L]` centre spectra.
    pub centers: Tensor,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Gathers the windows centred on `pixels`, in that order.
    pub fn gather(cube: &HsiCube, pixels: &[usize], k: usize, padding: Padding) -> Result<Self> {
        check_window_size(k)?;
        let l = cube.bands();
        let area = k * k;
        let mut windows = vec![0.0; pixels.len() * area * l];
        let mut centers = Vec::with_capacity(pixels.len() * l);
        for (b, &idx) in pixels.iter().enumerate() {
            if idx >= cube.pixel_count() {
                return Err(Error::Usage(format!("pixel index {idx} outside cube")));
            }
            let (i, j) = (idx / cube.width(), idx % cube.width());
            fill_window(cube, i, j, k, padding, &mut windows[b * area * l..(b + 1) * area * l]);
            centers.extend_from_slice(cube.pixel_at(idx));
        }
        Ok(Self {
            pixels: pixels.to_vec(),
            windows: Tensor::new(vec![pixels.len(), area, l], windows)?,
            centers: Tensor::new(vec![pixels.len(), l], centers)?,
        })
    }
}

/// Lazily yields the batches of one epoch; the last batch may be short.
pub struct Batches<'a> {
    cube: &'a HsiCube,
    order: Vec<usize>,
    batch_size: usize,
    k: usize,
    padding: Padding,
    next: usize,
}

impl Iterator for Batches<'_> {
    type Item = WindowBatch;

    fn next(&mut self) -> Option<WindowBatch> {
        if self.next >= self.order.len() {
            return None;
        }
        let end = (self.next + self.batch_size).min(self.order.len());
        let batch = WindowBatch::gather(self.cube, &self.order[self.next..end], self.k, self.padding)
            .expect("window size and indices validated when the iterator was built");
        self.next = end;
        Some(batch)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.next).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl ExactSizeIterator for Batches<'_> {}

/// The shuffled window batches for `epoch`.
pub fn make_batches<'a>(
    cube: &'a HsiCube,
    plan: &BatchPlan,
    epoch: usize,
    k: usize,
    padding: Padding,
) -> Result<Batches<'a>> {
    check_window_size(k)?;
    Ok(Batches {
        cube,
        order: plan.visit_order(cube.pixel_count(), epoch),
        batch_size: plan.batch_size,
        k,
        padding,
        next: 0,
    })
}
