//! Little-endian binary model format.
//!
//! Layout: magic `RDYNMLP1`, `u32` encoder and projector layer counts, then
//! per layer `u32` input and output dims, then every layer's weights
//! (row-major) followed by its biases, as `f64`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::mlp::{Layer, MlpModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RDYNMLP1";

pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for part in [model.encoder(), model.projector()] {
        out.extend((part.len() as u32).to_le_bytes());
    }
    for layer in model.layers() {
        out.extend((layer.input_dim() as u32).to_le_bytes());
        out.extend((layer.output_dim() as u32).to_le_bytes());
    }
    for layer in model.layers() {
        for i in 0..layer.weight.nrows() {
            for j in 0..layer.weight.ncols() {
                out.extend(layer.weight[(i, j)].to_le_bytes());
            }
        }
        for b in layer.bias.iter() {
            out.extend(b.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpModel> {
    let mut c = Cursor(bytes);
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let n_enc = c.u32()?;
    let n_proj = c.u32()?;
    let total = n_enc
        .checked_add(n_proj)
        .filter(|&t| t <= bytes.len() / 8)
        .ok_or_else(|| Error::Checkpoint("implausible layer count".into()))?;
    let mut dims = Vec::with_capacity(total);
    for _ in 0..total {
        dims.push((c.u32()?, c.u32()?));
    }
    let mut layers = Vec::with_capacity(total);
    for (input, output) in dims {
        let count = input
            .checked_mul(output)
            .filter(|&k| k <= c.0.len() / 8)
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let w: Vec<f64> = (0..count).map(|_| c.f64()).collect::<Result<_>>()?;
        let b: Vec<f64> = (0..output).map(|_| c.f64()).collect::<Result<_>>()?;
        layers.push(Layer::new(DMatrix::from_row_slice(output, input, &w), DVector::from_vec(b))?);
    }
    if !c.0.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", c.0.len())));
    }
    let projector = layers.split_off(n_enc);
    MlpModel::new(layers, projector).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
