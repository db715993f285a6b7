//! Flat binary checkpoints.
//!
//! Layout: 8 magic bytes, a little-endian `u64` header length, a JSON header naming
//! every tensor with its shape and element offset, then all values as little-endian
//! `f64` in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_model, Model, ModelConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SWTCKPT1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    seed: u64,
    config: ModelConfig,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: [usize; 4],
    offset: usize,
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let named = model.params.named();
    let mut offset = 0;
    let tensors = named
        .iter()
        .map(|(name, t)| {
            let e = Entry {
                name: name.clone(),
                shape: t.shape(),
                offset,
            };
            offset += t.len();
            e
        })
        .collect();
    let header = serde_json::to_vec(&Header {
        dtype: "f64-le".into(),
        seed: model.seed,
        config: model.config.clone(),
        tensors,
    })?;
    let mut bytes = Vec::with_capacity(16 + header.len() + offset * 8);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for (_, t) in &named {
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint (bad magic)".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body_start = 16usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header".into()))?;
    let header: Header =
        serde_json::from_slice(&bytes[16..body_start]).map_err(|e| bad(format!("header: {e}")))?;
    if header.dtype != "f64-le" {
        return Err(bad(format!("unsupported dtype {}", header.dtype)));
    }
    let values: Vec<f64> = bytes[body_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if (bytes.len() - body_start) % 8 != 0 {
        return Err(bad("payload is not a whole number of f64 values".into()));
    }
    let mut model = build_model(&header.config, header.seed)?;
    let names: Vec<(String, [usize; 4])> = model
        .params
        .named()
        .into_iter()
        .map(|(n, t)| (n, t.shape()))
        .collect();
    if names.len() != header.tensors.len() {
        return Err(bad(format!(
            "{} tensors stored, model has {}",
            header.tensors.len(),
            names.len()
        )));
    }
    for ((t, (name, shape)), entry) in model
        .params
        .tensors_mut()
        .into_iter()
        .zip(names)
        .zip(&header.tensors)
    {
        if entry.name != name || entry.shape != shape {
            return Err(bad(format!(
                "expected {name} {shape:?}, found {} {:?}",
                entry.name, entry.shape
            )));
        }
        let len = t.len();
        let src = values
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| bad(format!("{name} runs past the end")))?;
        t.data_mut().copy_from_slice(src);
    }
    Ok(model)
}
