//! Checkpoints: a JSON manifest plus a sibling `.bin` file holding every
//! parameter tensor as little-endian `f64`, concatenated in manifest order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::Variant;
use crate::model::{Linear, ModelConfig, ModelParams, PropagationLayer};
use crate::numeric::Tensor2;

const CHECKPOINT_FORMAT: &str = "nft-ckpt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub variant: Variant,
    pub num_users: usize,
    pub num_items: usize,
    pub feature_width: usize,
    pub seed: u64,
    /// Epoch the parameters were taken from.
    pub epoch: usize,
    /// File name of the weight block, relative to the manifest.
    pub weights: String,
    /// Hex SHA-256 of the weight block.
    pub sha256: String,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub num_items: usize,
    pub feature_width: usize,
    pub seed: u64,
    pub epoch: usize,
    pub params: ModelParams,
}

fn weights_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

impl Checkpoint {
    pub fn encode_weights(params: &ModelParams) -> Vec<u8> {
        let mut bytes = Vec::new();
        for t in params.tensors() {
            for v in t.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    /// Writes `<path>` (manifest) and `<path>.bin` (weights). Returns the
    /// weight digest.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<String> {
        let path = path.as_ref();
        let bytes = Checkpoint::encode_weights(&self.params);
        let digest = hex(&Sha256::digest(&bytes));
        let wpath = weights_path(path);
        let manifest = CheckpointManifest {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            config: self.config.clone(),
            variant: self.config.variant,
            num_users: self.params.num_users(),
            num_items: self.num_items,
            feature_width: self.feature_width,
            seed: self.seed,
            epoch: self.epoch,
            weights: wpath
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: digest.clone(),
            tensors: self
                .params
                .named_tensors()
                .into_iter()
                .map(|(name, t)| TensorEntry {
                    name,
                    rows: t.rows(),
                    cols: t.cols(),
                })
                .collect(),
        };
        std::fs::write(&wpath, &bytes).map_err(|e| Error::io(&wpath, e))?;
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        Ok(digest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: CheckpointManifest = serde_json::from_str(&text)?;
        if m.format != CHECKPOINT_FORMAT || m.version != 1 {
            return Err(Error::Checkpoint(format!("unsupported checkpoint {} v{}", m.format, m.version)));
        }
        if m.variant != m.config.variant {
            return Err(Error::Checkpoint("manifest variant disagrees with its config".into()));
        }
        let wpath = path.with_file_name(&m.weights);
        let bytes = std::fs::read(&wpath).map_err(|e| Error::io(&wpath, e))?;
        if hex(&Sha256::digest(&bytes)) != m.sha256 {
            return Err(Error::Checkpoint(format!("{}: weight digest mismatch", wpath.display())));
        }
        let expected: usize = m.tensors.iter().map(|t| t.rows * t.cols * 8).sum();
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{}: {} bytes, manifest implies {expected}",
                wpath.display(),
                bytes.len()
            )));
        }
        let mut offset = 0;
        let mut tensors = Vec::with_capacity(m.tensors.len());
        for entry in &m.tensors {
            let n = entry.rows * entry.cols;
            let data = bytes[offset..offset + n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            offset += n * 8;
            tensors.push((entry.name.clone(), Tensor2::new(entry.rows, entry.cols, data)?));
        }
        let params = assemble(&m, tensors)?;
        Ok(Checkpoint {
            config: m.config,
            num_items: m.num_items,
            feature_width: m.feature_width,
            seed: m.seed,
            epoch: m.epoch,
            params,
        })
    }
}

fn assemble(m: &CheckpointManifest, tensors: Vec<(String, Tensor2)>) -> Result<ModelParams> {
    let mut it = tensors.into_iter();
    let mut take = |expected: &str| -> Result<Tensor2> {
        match it.next() {
            Some((name, t)) if name == expected => Ok(t),
            Some((name, _)) => Err(Error::Checkpoint(format!("expected tensor `{expected}`, found `{name}`"))),
            None => Err(Error::Checkpoint(format!("missing tensor `{expected}`"))),
        }
    };
    let user_emb = take("user_emb")?;
    let item_emb = if m.config.variant.uses_features() {
        None
    } else {
        Some(take("item_emb")?)
    };
    let n_mlp = if m.config.variant.uses_features() {
        m.config.mlp_hidden.len() + 1
    } else {
        0
    };
    let mut mlp = Vec::with_capacity(n_mlp);
    for k in 0..n_mlp {
        mlp.push(Linear {
            weight: take(&format!("mlp.{k}.weight"))?,
            bias: take(&format!("mlp.{k}.bias"))?,
        });
    }
    let mut layers = Vec::with_capacity(m.config.layers);
    for k in 0..m.config.layers {
        layers.push(PropagationLayer {
            w1: take(&format!("layer.{k}.w1"))?,
            w2: take(&format!("layer.{k}.w2"))?,
            bias: take(&format!("layer.{k}.bias"))?,
        });
    }
    if let Some((name, _)) = it.next() {
        return Err(Error::Checkpoint(format!("unexpected extra tensor `{name}`")));
    }
    if user_emb.rows() != m.num_users || user_emb.cols() != m.config.embedding_dim {
        return Err(Error::Checkpoint("user embedding shape disagrees with manifest".into()));
    }
    Ok(ModelParams {
        user_emb,
        item_emb,
        mlp,
        layers,
    })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureBundle;
    use crate::model::init_params;
    use crate::seed::rng_from_seed;

    fn sample() -> Checkpoint {
        let config = ModelConfig {
            embedding_dim: 4,
            layers: 2,
            ..ModelConfig::default()
        };
        let params = init_params(&config, 3, 5, &FeatureBundle::empty(), &mut rng_from_seed(1)).unwrap();
        Checkpoint {
            config,
            num_items: 5,
            feature_width: 0,
            seed: 1,
            epoch: 7,
            params,
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        let ck = sample();
        let digest = ck.save(&p).unwrap();
        assert!(dir.path().join("model.bin").exists());
        let back = Checkpoint::load(&p).unwrap();
        assert_eq!(back, ck);
        assert_eq!(digest.len(), 64);
        let bytes = std::fs::read(dir.path().join("model.bin")).unwrap();
        let n: usize = ck.params.tensors().iter().map(|t| t.len()).sum();
        assert_eq!(bytes.len(), n * 8);
        assert_eq!(&bytes[..8], &ck.params.user_emb.data()[0].to_le_bytes());
    }

    #[test]
    fn corrupted_weights_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        sample().save(&p).unwrap();
        let wp = dir.path().join("model.bin");
        let mut bytes = std::fs::read(&wp).unwrap();
        bytes[3] ^= 0xff;
        std::fs::write(&wp, bytes).unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(Error::Checkpoint(_))));
    }
}
