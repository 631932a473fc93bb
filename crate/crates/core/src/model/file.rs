//! Model container.
//!
//! Layout: the 8-byte magic `TDAMODEL`, a little-endian `u64` header length,
//! a UTF-8 JSON header, then every parameter tensor as little-endian `f64`
//! values in header order. The header carries the architecture, the force
//! normalisation and training metadata.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::params::{Architecture, ModelParams, NamedTensor};
use crate::model::transfer::TransferKind;
use crate::sim::domain::DomainConfig;
use crate::train::normalize::NormalizationSpec;

pub const MODEL_MAGIC: &[u8; 8] = b"TDAMODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    /// `pretrain` or `adapt`.
    pub stage: String,
    /// Method label used in comparison tables.
    pub method: String,
    pub source_domain: Option<DomainConfig>,
    pub target_domain: Option<DomainConfig>,
    pub transfer: Option<TransferKind>,
    /// Seed and ratios of the target split used during adaptation.
    pub split_seed: Option<u64>,
    pub split_ratios: Option<[f64; 3]>,
    /// Fully resolved run configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub normalization: NormalizationSpec,
    pub metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    architecture: Architecture,
    normalization: NormalizationSpec,
    metadata: ModelMetadata,
    tensors: Vec<TensorEntry>,
}

impl TrainedModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format_version: MODEL_FORMAT_VERSION,
            architecture: self.params.arch.clone(),
            normalization: self.normalization,
            metadata: self.metadata.clone(),
            tensors: self
                .params
                .tensors
                .iter()
                .map(|t| TensorEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 8 * self.params.num_params());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &self.params.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::ModelFile(m.to_string());
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != MODEL_MAGIC {
            return Err(bad("not a model file (bad magic)"));
        }
        let mut len = [0u8; 8];
        bytes.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
        let len = u64::from_le_bytes(len) as usize;
        if bytes.len() < len {
            return Err(bad("truncated header"));
        }
        let (json, mut rest) = bytes.split_at(len);
        let header: Header = serde_json::from_slice(json)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                header.format_version
            )));
        }
        header.normalization.validate()?;
        let mut params = ModelParams::zeros(&header.architecture)?;
        if params.tensors.len() != header.tensors.len() {
            return Err(bad("tensor count does not match architecture"));
        }
        for (t, e) in params.tensors.iter_mut().zip(&header.tensors) {
            if t.name != e.name || t.shape != e.shape {
                return Err(Error::ModelFile(format!(
                    "tensor {} {:?} does not match architecture ({} {:?})",
                    e.name, e.shape, t.name, t.shape
                )));
            }
            read_tensor(&mut rest, t)?;
        }
        if !rest.is_empty() {
            return Err(bad("trailing bytes after tensor data"));
        }
        Ok(TrainedModel {
            params,
            normalization: header.normalization,
            metadata: header.metadata,
        })
    }

    /// Write atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_tensor(rest: &mut &[u8], t: &mut NamedTensor) -> Result<()> {
    let need = 8 * t.data.len();
    if rest.len() < need {
        return Err(Error::ModelFile(format!("truncated data for tensor {}", t.name)));
    }
    let (chunk, tail) = rest.split_at(need);
    for (v, b) in t.data.iter_mut().zip(chunk.chunks_exact(8)) {
        *v = f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    }
    *rest = tail;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TrainedModel {
        let arch = Architecture {
            image_height: 8,
            image_width: 8,
            channels: vec![3, 4],
            bottleneck_dim: 5,
            num_classes: 4,
        };
        let mut params = ModelParams::init(&arch, 9).unwrap();
        params.tensors[1].data[0] = f64::MIN_POSITIVE;
        params.tensors[3].data[1] = -0.0;
        TrainedModel {
            params,
            normalization: NormalizationSpec::new([-0.75, -0.7499999999999999, -3.0], [0.75, 0.75, 0.0]).unwrap(),
            metadata: ModelMetadata {
                stage: "pretrain".into(),
                method: "source-only".into(),
                source_domain: Some("mb0i0".parse().unwrap()),
                ..Default::default()
            },
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let bytes = m.to_bytes().unwrap();
        let back = TrainedModel::from_bytes(&bytes).unwrap();
        for (a, b) in m.params.tensors.iter().zip(&back.params.tensors) {
            let ab: Vec<u64> = a.data.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.data.iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
        assert_eq!(back, m);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = model().to_bytes().unwrap();
        assert!(TrainedModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(TrainedModel::from_bytes(&extra).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(TrainedModel::from_bytes(&magic).is_err());
    }
}
