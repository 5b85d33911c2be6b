//! Binary checkpoint: magic, configuration, then every parameter tensor as
//! `ndim: u32, dims: u32…, values: f64…`, all little-endian.

use std::fs;
use std::path::Path;

use super::net::{Architecture, Model};
use super::{ModelConfig, ModelParams};
use crate::data::Padding;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SAWUCKP1";

pub fn checkpoint_bytes(model: &Model) -> Vec<u8> {
    let c = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(match model.architecture {
        Architecture::Sawu => 0,
        Architecture::Baseline => 1,
    });
    out.push(c.pixel_attention as u8);
    out.push(match c.padding {
        Padding::Reflect => 0,
        Padding::Replicate => 1,
    });
    for v in [c.window, c.endmembers, c.bands, c.epochs, c.batch_size] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&c.seed.to_le_bytes());
    for v in [c.lambda1, c.lambda2, c.dropout, c.eps, c.lr_encoder, c.lr_decoder] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let tensors = model.params.all_tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for d in t.shape() {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Usage("checkpoint ends early".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
        return Err(Error::Usage("not a checkpoint".into()));
    }
    let architecture = match r.u8()? {
        0 => Architecture::Sawu,
        1 => Architecture::Baseline,
        x => return Err(Error::Usage(format!("unknown architecture tag {x}"))),
    };
    let pixel_attention = r.u8()? != 0;
    let padding = match r.u8()? {
        0 => Padding::Reflect,
        1 => Padding::Replicate,
        x => return Err(Error::Usage(format!("unknown padding tag {x}"))),
    };
    let (window, endmembers, bands, epochs, batch_size) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    let seed = r.u64()?;
    let mut reals = [0.0; 6];
    for v in reals.iter_mut() {
        *v = r.f64()?;
    }
    let [lambda1, lambda2, dropout, eps, lr_encoder, lr_decoder] = reals;
    let config = ModelConfig {
        window,
        endmembers,
        bands,
        lambda1,
        lambda2,
        dropout,
        eps,
        pixel_attention,
        epochs,
        batch_size,
        lr_encoder,
        lr_decoder,
        seed,
        padding,
    };
    let count = r.u32()?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = r.u32()?;
        let shape = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        tensors.push(Tensor::new(shape, data)?);
    }
    if r.at != bytes.len() {
        return Err(Error::Usage("trailing bytes after checkpoint".into()));
    }
    Model::new(config, architecture, ModelParams::from_tensors(tensors)?)
}

pub fn save_checkpoint(path: &Path, model: &Model) -> Result<()> {
    fs::write(path, checkpoint_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|e| Error::format(path, e.to_string()))
}
