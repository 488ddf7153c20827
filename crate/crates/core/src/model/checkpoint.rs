//! Bit-exact checkpoint format.
//!
//! Layout: magic bytes `SCLM`, little-endian u32 version, little-endian u32
//! header length, UTF-8 JSON header (model config, provenance, ordered tensor
//! descriptors with name / shape / byte offset), then raw little-endian f32
//! payloads in descriptor order. Offsets are relative to the payload start.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{BlockParams, TransformerModel};
use super::{ModelConfig, ModelError, Provenance};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SCLM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("truncated tensor table: '{name}' needs {needed} bytes at offset {offset}, payload has {available}")]
    Truncated {
        name: String,
        offset: u64,
        needed: u64,
        available: u64,
    },
    #[error("tensor '{name}': declared byte length {declared} does not match shape {shape:?} ({expected} bytes)")]
    LengthMismatch {
        name: String,
        declared: u64,
        shape: Vec<usize>,
        expected: u64,
    },
    #[error("invalid model in checkpoint: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    provenance: Provenance,
    tensors: Vec<TensorDesc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorDesc {
    name: String,
    shape: Vec<usize>,
    offset: u64,
    byte_len: u64,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_checkpoint(model: &TransformerModel, path: &Path) -> Result<(), CheckpointError> {
    let mut descs = Vec::new();
    let mut payload: Vec<u8> = Vec::new();
    let entries = TransformerModel::param_entries(&model.config);
    let mut idx = 0usize;
    model.visit_params(|name, data| {
        let (expected_name, shape) = &entries[idx];
        debug_assert_eq!(expected_name, name);
        let offset = payload.len() as u64;
        for v in data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        descs.push(TensorDesc {
            name: name.to_string(),
            shape: shape.clone(),
            offset,
            byte_len: (data.len() * 4) as u64,
        });
        idx += 1;
    });
    let header = Header {
        config: model.config,
        provenance: model.provenance.clone(),
        tensors: descs,
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| CheckpointError::CorruptHeader(format!("encode: {e}")))?;
    let mut out = Vec::with_capacity(12 + header_bytes.len() + payload.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    out.extend_from_slice(&payload);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<TransformerModel, CheckpointError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() < 12 {
        return Err(CheckpointError::CorruptHeader(format!(
            "file is {} bytes, smaller than the fixed preamble",
            bytes.len()
        )));
    }
    if bytes[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::CorruptHeader(format!(
            "bad magic {:02x?}",
            &bytes[..4]
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_start = 12 + header_len;
    if payload_start > bytes.len() {
        return Err(CheckpointError::CorruptHeader(format!(
            "declared header length {header_len} extends past end of file"
        )));
    }
    let header: Header = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| CheckpointError::CorruptHeader(format!("decode: {e}")))?;
    header
        .config
        .validate()
        .map_err(|e: ModelError| CheckpointError::InvalidModel(e.to_string()))?;
    let payload = &bytes[payload_start..];

    let expected = TransformerModel::param_entries(&header.config);
    if header.tensors.len() != expected.len() {
        return Err(CheckpointError::CorruptHeader(format!(
            "tensor table has {} entries, model needs {}",
            header.tensors.len(),
            expected.len()
        )));
    }
    let mut values: Vec<Vec<f32>> = Vec::with_capacity(expected.len());
    for (desc, (name, shape)) in header.tensors.iter().zip(&expected) {
        if &desc.name != name || &desc.shape != shape {
            return Err(CheckpointError::CorruptHeader(format!(
                "tensor table entry '{}' {:?} does not match expected '{}' {:?}",
                desc.name, desc.shape, name, shape
            )));
        }
        let numel: usize = shape.iter().product();
        let want = (numel * 4) as u64;
        if desc.byte_len != want {
            return Err(CheckpointError::LengthMismatch {
                name: desc.name.clone(),
                declared: desc.byte_len,
                shape: shape.clone(),
                expected: want,
            });
        }
        let end = desc.offset.checked_add(desc.byte_len).ok_or_else(|| {
            CheckpointError::CorruptHeader(format!("offset overflow in '{}'", desc.name))
        })?;
        if end > payload.len() as u64 {
            return Err(CheckpointError::Truncated {
                name: desc.name.clone(),
                offset: desc.offset,
                needed: desc.byte_len,
                available: payload.len() as u64,
            });
        }
        let raw = &payload[desc.offset as usize..end as usize];
        values.push(
            raw.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }

    let c = header.config;
    let mut iter = values.into_iter();
    let tok_emb = iter.next().unwrap();
    let mut layers = Vec::with_capacity(c.n_layers);
    for _ in 0..c.n_layers {
        layers.push(BlockParams {
            attn_norm: iter.next().unwrap(),
            wq: iter.next().unwrap(),
            wk: iter.next().unwrap(),
            wv: iter.next().unwrap(),
            wo: iter.next().unwrap(),
            ffn_norm: iter.next().unwrap(),
            w_gate: iter.next().unwrap(),
            w_up: iter.next().unwrap(),
            w_down: iter.next().unwrap(),
        });
    }
    let final_norm = iter.next().unwrap();
    let head = iter.next().unwrap();
    Ok(TransformerModel {
        config: c,
        tok_emb,
        layers,
        final_norm,
        head,
        provenance: header.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn model() -> TransformerModel {
        let mut m = TransformerModel::init(ModelConfig {
            vocab_size: 13,
            d_model: 8,
            n_heads: 2,
            n_layers: 2,
            d_ff: 12,
            max_seq_len: 16,
            norm_eps: 1e-5,
            seed: 3,
        })
        .unwrap();
        m.provenance.training.push("pretrain: 1000 tokens".to_string());
        m.provenance.lineage.push("M_0".to_string());
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sclm");
        let m = model();
        save_checkpoint(&m, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(m.config, back.config);
        assert_eq!(m.provenance, back.provenance);
        let mut pairs: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
        m.visit_params(|_, a| pairs.push((a.iter().map(|x| x.to_bits()).collect(), vec![])));
        let mut idx = 0;
        back.visit_params(|_, b| {
            pairs[idx].1 = b.iter().map(|x| x.to_bits()).collect();
            idx += 1;
        });
        for (a, b) in pairs {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn truncated_file_is_a_structured_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sclm");
        save_checkpoint(&model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 10);
        std::fs::write(&path, &bytes).unwrap();
        match load_checkpoint(&path) {
            Err(CheckpointError::Truncated { name, .. }) => assert_eq!(name, "head"),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sclm");
        save_checkpoint(&model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::CorruptHeader(_))
        ));
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'S';
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::VersionMismatch { found: 7, .. })
        ));
    }

    #[test]
    fn declared_length_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sclm");
        save_checkpoint(&model(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut header: serde_json::Value =
            serde_json::from_slice(&bytes[12..12 + header_len]).unwrap();
        header["tensors"][0]["byte_len"] = serde_json::json!(4);
        let new_header = serde_json::to_vec(&header).unwrap();
        let mut out = Vec::new();
        out.extend_from_slice(&bytes[..8]);
        out.extend_from_slice(&(new_header.len() as u32).to_le_bytes());
        out.extend_from_slice(&new_header);
        out.extend_from_slice(&bytes[12 + header_len..]);
        std::fs::write(&path, &out).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::LengthMismatch { .. })
        ));
    }
}
