//! Binary checkpoint container.
//!
//! Layout: the 8-byte magic `LLMCKPT1`, a little-endian `u64` header length,
//! a UTF-8 JSON header, then every tensor as row-major little-endian `f64`
//! values. The header carries the encoder config, tensor names, shapes and
//! offsets, optional tokenizer files, run metadata and any auxiliary tensors
//! (optimizer moments).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LLMCKPT1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerFiles {
    pub vocab_json: String,
    pub merges_txt: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetadata {
    pub step: u64,
    pub seed: u64,
    /// Seconds since the Unix epoch, when known.
    pub created_unix: Option<u64>,
    /// Free-form run information (stage, epoch, metrics, ...).
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A named auxiliary tensor stored alongside the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub tokenizer: Option<TokenizerFiles>,
    pub metadata: CheckpointMetadata,
    pub aux: Vec<NamedTensor>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: EncoderConfig,
    num_classes: Option<usize>,
    metadata: CheckpointMetadata,
    tokenizer: Option<TokenizerFiles>,
    tensors: Vec<TensorEntry>,
    aux_tensors: Vec<TensorEntry>,
}

impl Checkpoint {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            tokenizer: None,
            metadata: CheckpointMetadata::default(),
            aux: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let mut entry = |name: String, shape: Vec<usize>| {
            let len: usize = shape.iter().product();
            let e = TensorEntry { name, shape, offset };
            offset += len;
            e
        };
        let tensors: Vec<TensorEntry> = self
            .params
            .tensors()
            .into_iter()
            .map(|t| entry(t.name, t.shape))
            .collect();
        let aux_tensors: Vec<TensorEntry> = self
            .aux
            .iter()
            .map(|t| entry(t.name.clone(), t.shape.clone()))
            .collect();
        let header = Header {
            format_version: FORMAT_VERSION,
            config: self.params.config.clone(),
            num_classes: self.params.classifier.as_ref().map(|c| c.num_classes()),
            metadata: self.metadata.clone(),
            tokenizer: self.tokenizer.clone(),
            tensors,
            aux_tensors,
        };
        let header = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + header.len() + offset * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.params.tensors() {
            for v in t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for t in &self.aux {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::ShapeMismatch(format!("checkpoint: {m}"));
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic header"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let header_end = 16usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[16..header_end])?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {}", header.format_version)));
        }
        let payload = &bytes[header_end..];
        if !payload.len().is_multiple_of(8) {
            return Err(bad("payload is not a whole number of f64 values"));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let slice = |e: &TensorEntry| -> Result<&[f64]> {
            let len: usize = e.shape.iter().product();
            values
                .get(e.offset..e.offset + len)
                .ok_or_else(|| bad(&format!("tensor {} runs past the payload", e.name)))
        };

        let mut params = ModelParams::zeros(&header.config)?;
        if let Some(n) = header.num_classes {
            params.attach_classifier(n, 0)?;
        }
        let mut by_name: BTreeMap<&str, &TensorEntry> =
            header.tensors.iter().map(|e| (e.name.as_str(), e)).collect();
        for t in params.tensors_mut() {
            let e = by_name
                .remove(t.name.as_str())
                .ok_or_else(|| bad(&format!("tensor {} is missing", t.name)))?;
            if e.shape != t.shape {
                return Err(bad(&format!(
                    "tensor {} has shape {:?}, config implies {:?}",
                    t.name, e.shape, t.shape
                )));
            }
            t.data.copy_from_slice(slice(e)?);
        }
        if let Some(name) = by_name.keys().next() {
            return Err(bad(&format!("unexpected tensor {name}")));
        }
        let aux = header
            .aux_tensors
            .iter()
            .map(|e| {
                Ok(NamedTensor {
                    name: e.name.clone(),
                    shape: e.shape.clone(),
                    data: slice(e)?.to_vec(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            params,
            tokenizer: header.tokenizer,
            metadata: header.metadata,
            aux,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = EncoderConfig::new(1, 8, 2, 270).with_max_positions(16);
        let mut params = ModelParams::init(&config, 5).unwrap();
        params.attach_classifier(3, 6).unwrap();
        Checkpoint {
            params,
            tokenizer: Some(TokenizerFiles {
                vocab_json: "{}".into(),
                merges_txt: "#version: 1\n".into(),
            }),
            metadata: CheckpointMetadata {
                step: 12,
                seed: 99,
                created_unix: Some(1_700_000_000),
                extra: BTreeMap::from([("stage".into(), "pretrain".into())]),
            },
            aux: vec![NamedTensor {
                name: "adam.m.x".into(),
                shape: vec![2, 2],
                data: vec![0.1, -0.2, 1e-300, f64::MIN_POSITIVE],
            }],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/model.ckpt");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes().unwrap(), ck.to_bytes().unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[16..16 + header_len]).unwrap();
        // Claim a wider hidden size than the stored tensors have.
        let forged = header.replacen("\"hidden_size\":8", "\"hidden_size\":16", 1);
        assert_ne!(forged, header);
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(forged.len() as u64).to_le_bytes());
        out.extend_from_slice(forged.as_bytes());
        out.extend_from_slice(&bytes[16 + header_len..]);
        assert!(matches!(Checkpoint::from_bytes(&out), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(Checkpoint::from_bytes(b"nope").is_err());
        let mut bytes = sample().to_bytes().unwrap();
        bytes.truncate(bytes.len() - 4);
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }
}
