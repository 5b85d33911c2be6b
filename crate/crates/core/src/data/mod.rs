//! Cubes, ground truth, windows, batches and synthetic scenes.

mod batch;
mod cube;
mod synthetic;
mod window;

pub use batch::{make_batches, BatchPlan, Batches, WindowBatch};
pub use cube::{
    load_abundances, load_cube, load_ground_truth, read_binary, read_matrix_text, save_abundances,
    save_cube, write_binary, write_matrix_text, AbundanceMap, CubeFormat, GroundTruth, HsiCube,
    CUBE_MAGIC,
};
pub use synthetic::{generate_synthetic, measured_snr_db, SyntheticSpec, MAX_FRACTION};
pub use window::{extract_window, Padding, Window};
