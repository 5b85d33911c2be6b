//! File renderings: 8-bit grayscale abundance maps and endmember spectra
//! as comma-separated columns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::AbundanceMap;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Binary PGM (`P5`) of abundance channel `k`; 0 maps to 0 and 1 to 255,
/// values outside `[0, 1]` are clipped.
pub fn abundance_pgm(map: &AbundanceMap, k: usize) -> Result<Vec<u8>> {
    if k >= map.endmembers() {
        return Err(Error::Usage(format!(
            "endmember {k} out of range for a map with {}",
            map.endmembers()
        )));
    }
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(map.channel(k).iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn write_abundance_pgm(path: &Path, map: &AbundanceMap, k: usize) -> Result<()> {
    fs::write(path, abundance_pgm(map, k)?).map_err(|e| Error::io(path, e))
}

/// `band,em1,…,emP` header, then one row per band.
pub fn spectra_csv(endmembers: &Tensor) -> Result<String> {
    if endmembers.ndim() != 2 {
        return Err(Error::Shape {
            op: "spectra_csv",
            left: endmembers.shape().to_vec(),
            right: vec![],
        });
    }
    let p = endmembers.cols();
    let mut out = String::from("band");
    for k in 1..=p {
        let _ = write!(out, ",em{k}");
    }
    out.push('\n');
    for b in 0..endmembers.rows() {
        let _ = write!(out, "{}", b + 1);
        for v in endmembers.row(b) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_spectra_csv(path: &Path, endmembers: &Tensor) -> Result<()> {
    fs::write(path, spectra_csv(endmembers)?).map_err(|e| Error::io(path, e))
}
