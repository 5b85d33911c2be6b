use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{Mode, Model, ParamVars};
use crate::data::{AbundanceMap, HsiCube, WindowBatch};
use crate::error::{Error, Result};
use crate::tensor::Graph;

const CHUNK: usize = 256;

/// Abundances for every pixel of a cube.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub abundances: AbundanceMap,
    /// Pixels whose abundance vector came out all zero.
    pub degenerate: usize,
}

/// Runs the network in inference mode on the window around every pixel.
pub fn infer_abundances(model: &Model, cube: &HsiCube) -> Result<Inference> {
    let c = &model.config;
    if cube.bands() != c.bands {
        return Err(Error::Config(format!(
            "model expects {} bands, cube has {}",
            c.bands,
            cube.bands()
        )));
    }
    let k = model.input_window();
    let p = c.endmembers;
    let mut values = Vec::with_capacity(cube.pixel_count() * p);
    let mut degenerate = 0;
    // inference never samples dropout masks
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let all: Vec<usize> = (0..cube.pixel_count()).collect();
    for chunk in all.chunks(CHUNK) {
        let batch = WindowBatch::gather(cube, chunk, k, c.padding)?;
        let mut g = Graph::new();
        let vars = ParamVars::register(&mut g, &model.params, false);
        let fwd = model.forward(&mut g, &vars, &batch, Mode::Infer, &mut rng)?;
        let s = g.value(fwd.abundances);
        degenerate += s
            .data()
            .chunks(p)
            .filter(|row| row.iter().all(|v| *v == 0.0))
            .count();
        values.extend_from_slice(s.data());
    }
    Ok(Inference {
        abundances: AbundanceMap::new(cube.height(), cube.width(), p, values)?,
        degenerate,
    })
}
