use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Magic prefix of the binary cube format.
pub const CUBE_MAGIC: &[u8; 8] = b"HSICUBE1";
const HEADER_LEN: usize = CUBE_MAGIC.len() + 12;

/// An `H×W×L` reflectance cube stored band-interleaved-by-pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiCube {
    height: usize,
    width: usize,
    bands: usize,
    values: Vec<f64>,
}

impl HsiCube {
    pub fn new(height: usize, width: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if bands < 2 {
            return Err(Error::Usage(format!("a cube needs at least 2 bands, got {bands}")));
        }
        if height * width == 0 {
            return Err(Error::Usage("a cube needs at least one pixel".into()));
        }
        check_payload(height, width, bands, &values)?;
        Ok(Self {
            height,
            width,
            bands,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectrum of pixel `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        self.pixel_at(i * self.width + j)
    }

    /// Spectrum of the pixel with row-major linear index `idx`.
    pub fn pixel_at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.bands..(idx + 1) * self.bands]
    }

    /// The cube as a `pixels × bands` matrix.
    pub fn to_matrix(&self) -> Tensor {
        Tensor::new(vec![self.pixel_count(), self.bands], self.values.clone())
            .expect("cube payload matches its dimensions")
    }
}

/// Per-pixel abundance vectors, `H×W×P`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbundanceMap {
    height: usize,
    width: usize,
    endmembers: usize,
    values: Vec<f64>,
}

impl AbundanceMap {
    pub fn new(height: usize, width: usize, endmembers: usize, values: Vec<f64>) -> Result<Self> {
        if endmembers == 0 {
            return Err(Error::Usage("abundance map with zero endmembers".into()));
        }
        check_payload(height, width, endmembers, &values)?;
        Ok(Self {
            height,
            width,
            endmembers,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn endmembers(&self) -> usize {
        self.endmembers
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        self.pixel_at(i * self.width + j)
    }

    pub fn pixel_at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.endmembers..(idx + 1) * self.endmembers]
    }

    /// The `H·W` values of endmember `k`, row-major.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.values
            .chunks(self.endmembers)
            .map(|px| px[k])
            .collect()
    }
}

/// Reference endmembers (`L×P`) and abundances for a scene.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub endmembers: Tensor,
    pub abundances: AbundanceMap,
}

impl GroundTruth {
    pub fn new(endmembers: Tensor, abundances: AbundanceMap) -> Result<Self> {
        if endmembers.ndim() != 2 || endmembers.shape()[1] != abundances.endmembers() {
            return Err(Error::Shape {
                op: "ground_truth",
                left: endmembers.shape().to_vec(),
                right: vec![abundances.endmembers()],
            });
        }
        Ok(Self {
            endmembers,
            abundances,
        })
    }

    /// Noise-free mixtures `abundances · endmembersᵀ`, band-interleaved-by-pixel.
    pub fn mixtures(&self) -> Vec<f64> {
        let (l, p) = (self.endmembers.shape()[0], self.endmembers.shape()[1]);
        let e = self.endmembers.data();
        let mut out = Vec::with_capacity(self.abundances.pixel_count() * l);
        for a in self.abundances.values().chunks(p) {
            for b in 0..l {
                out.push((0..p).map(|k| e[b * p + k] * a[k]).sum());
            }
        }
        out
    }
}

fn check_payload(h: usize, w: usize, d: usize, values: &[f64]) -> Result<()> {
    if values.len() != h * w * d {
        return Err(Error::Shape {
            op: "cube",
            left: vec![h, w, d],
            right: vec![values.len()],
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { op: "cube" });
    }
    Ok(())
}

/// How a cube file on disk is encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeFormat {
    /// Magic, `H W L` as little-endian `u32`, then `H·W·L` little-endian `f64`
    /// band-interleaved-by-pixel.
    Binary,
    /// Whitespace-separated `pixels × bands` matrix, pixels in row-major order.
    Text { height: usize, width: usize },
}

/// Raw `(H, W, depth, values)` read from a binary cube file.
pub fn read_binary(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN || &bytes[..CUBE_MAGIC.len()] != CUBE_MAGIC {
        return Err(Error::format(path, "missing cube header"));
    }
    let dim = |i: usize| {
        let at = CUBE_MAGIC.len() + 4 * i;
        u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice")) as usize
    };
    let (h, w, d) = (dim(0), dim(1), dim(2));
    if h == 0 || w == 0 || d == 0 {
        return Err(Error::format(path, format!("non-positive dimensions {h}×{w}×{d}")));
    }
    let expected = h * w * d;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected * 8 {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: payload.len() / 8,
        });
    }
    if payload.len() > expected * 8 {
        return Err(Error::format(path, "trailing bytes after payload"));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path, "non-finite value in payload"));
    }
    Ok((h, w, d, values))
}

/// Writes any `H×W×depth` payload in the binary cube format.
pub fn write_binary(path: &Path, h: usize, w: usize, d: usize, values: &[f64]) -> Result<()> {
    check_payload(h, w, d, values)?;
    let dims = [h, w, d]
        .iter()
        .map(|&x| u32::try_from(x).map_err(|_| Error::Usage(format!("dimension {x} exceeds u32"))))
        .collect::<Result<Vec<u32>>>()?;
    let mut buf = Vec::with_capacity(HEADER_LEN + values.len() * 8);
    buf.extend_from_slice(CUBE_MAGIC);
    for d in dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a whitespace-separated numeric matrix; `#` starts a comment line.
pub fn read_matrix_text(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(path, format!("line {}: bad value {tok:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!("line {}: {} columns, expected {}", lineno + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty matrix"));
    }
    Tensor::from_rows(&rows)
}

pub fn write_matrix_text(path: &Path, m: &Tensor) -> Result<()> {
    let (r, c) = (m.rows(), m.cols());
    let mut out = String::new();
    for i in 0..r {
        let line: Vec<String> = m.data()[i * c..(i + 1) * c].iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_cube(path: &Path, format: CubeFormat) -> Result<HsiCube> {
    match format {
        CubeFormat::Binary => {
            let (h, w, l, values) = read_binary(path)?;
            HsiCube::new(h, w, l, values).map_err(|e| Error::format(path, e.to_string()))
        }
        CubeFormat::Text { height, width } => {
            let m = read_matrix_text(path)?;
            if m.rows() != height * width {
                return Err(Error::Truncated {
                    path: path.into(),
                    expected: height * width,
                    found: m.rows(),
                });
            }
            let bands = m.cols();
            HsiCube::new(height, width, bands, m.into_data())
                .map_err(|e| Error::format(path, e.to_string()))
        }
    }
}

pub fn save_cube(path: &Path, cube: &HsiCube, format: CubeFormat) -> Result<()> {
    match format {
        CubeFormat::Binary => write_binary(path, cube.height, cube.width, cube.bands, &cube.values),
        CubeFormat::Text { .. } => write_matrix_text(path, &cube.to_matrix()),
    }
}

pub fn load_abundances(path: &Path) -> Result<AbundanceMap> {
    let (h, w, p, values) = read_binary(path)?;
    AbundanceMap::new(h, w, p, values)
}

pub fn save_abundances(path: &Path, map: &AbundanceMap) -> Result<()> {
    write_binary(path, map.height, map.width, map.endmembers, &map.values)
}

/// Loads endmember (`L×P` text) and abundance (binary) ground truth.
pub fn load_ground_truth(endmembers: &Path, abundances: &Path) -> Result<GroundTruth> {
    GroundTruth::new(read_matrix_text(endmembers)?, load_abundances(abundances)?)
}
