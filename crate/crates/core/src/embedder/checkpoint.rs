//! Binary model checkpoints.
//!
//! `b"SWCK"`, u16 version, u32 manifest length, a JSON manifest
//! (architecture plus tensor specs), then parameters followed by the
//! momentum buffer as little-endian f64.

use super::model::{Architecture, EmbedModel};
use super::tensor::{Params, TensorSpec};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SWCK";
const VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    architecture: Architecture,
    tensors: Vec<TensorSpec>,
    values: usize,
}

pub fn save_checkpoint(model: &EmbedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let manifest = Manifest {
        architecture: model.architecture().clone(),
        tensors: model.params().specs().to_vec(),
        values: model.params().len(),
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    let mut buf = Vec::with_capacity(10 + json.len() + 16 * manifest.values);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for v in model.params().data().iter().chain(model.velocity()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EmbedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let mlen = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(10..10 + mlen).ok_or_else(|| bad("truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    let payload = &bytes[10 + mlen..];
    if payload.len() != 16 * manifest.values {
        return Err(bad("payload size does not match manifest"));
    }
    let mut vals = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let data: Vec<f64> = vals.by_ref().take(manifest.values).collect();
    let velocity: Vec<f64> = vals.collect();
    let mut model = EmbedModel::from_params(manifest.architecture, Params::from_parts(manifest.tensors, data))?;
    model.set_velocity(velocity)?;
    Ok(model)
}
