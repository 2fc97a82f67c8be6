use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{SplitRatios, DEFAULT_MIN_ITEM_INTERACTIONS};
use crate::error::{Error, Result};
use crate::evaluation::GridSpec;
use crate::features::{MissingPolicy, Variant, DEFAULT_PRICE_DIM};
use crate::model::ModelConfig;
use crate::training::TrainConfig;
use crate::baselines::DEFAULT_KNN_NEIGHBORS;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturePaths {
    pub img: Option<PathBuf>,
    pub txt: Option<PathBuf>,
    pub price: Option<PathBuf>,
}

/// A model entry for `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pop,
    ItemKnn,
    BprMf,
    Ngcf(Variant),
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<ModelKind> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pop" => ModelKind::Pop,
            "itemknn" => ModelKind::ItemKnn,
            "bprmf" | "bpr-mf" => ModelKind::BprMf,
            "ngcf" => ModelKind::Ngcf(Variant::None),
            other => match other.strip_prefix("ngcf-") {
                Some(v) if v != "none" => ModelKind::Ngcf(v.parse()?),
                _ => return Err(Error::Config(format!("unknown model `{s}`"))),
            },
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pop => "Pop",
            ModelKind::ItemKnn => "ItemKNN",
            ModelKind::BprMf => "BPR-MF",
            ModelKind::Ngcf(v) => v.model_name(),
        }
    }
}

fn default_min_interactions() -> usize {
    DEFAULT_MIN_ITEM_INTERACTIONS
}
fn default_ks() -> Vec<usize> {
    vec![10, 20]
}
fn default_true() -> bool {
    true
}
fn default_price_dim() -> usize {
    DEFAULT_PRICE_DIM
}
fn default_knn() -> usize {
    DEFAULT_KNN_NEIGHBORS
}
fn default_models() -> Vec<String> {
    ["pop", "itemknn", "bprmf", "ngcf", "ngcf-img", "ngcf-txt", "ngcf-price", "ngcf-all"]
        .map(String::from)
        .to_vec()
}

/// Everything one run needs, read from a JSON file. Relative paths resolve
/// against the file's directory. The transaction or dataset file is chosen
/// by extension: `.csv` is ingested on the fly, anything else is read as a
/// saved dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Dataset label in tables; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_min_interactions")]
    pub min_interactions: usize,
    #[serde(default)]
    pub features: FeaturePaths,
    #[serde(default)]
    pub missing_features: MissingPolicy,
    #[serde(default = "default_price_dim")]
    pub price_dim: usize,
    /// Standardize feature columns with train-item statistics.
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub model: ModelConfig,
    /// The training seed is always derived from `seed`; any value here is
    /// ignored.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub split: SplitRatios,
    #[serde(default = "default_knn")]
    pub knn_neighbors: usize,
    /// Models compared by `evaluate`.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        for p in [&mut self.features.img, &mut self.features.txt, &mut self.features.price]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        if let Some(p) = &mut self.out {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.grid.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must be nonempty and positive".into()));
        }
        if self.knn_neighbors == 0 {
            return Err(Error::Config("knn_neighbors must be at least 1".into()));
        }
        if self.price_dim == 0 {
            return Err(Error::Config("price_dim must be at least 1".into()));
        }
        for m in &self.models {
            ModelKind::parse(m)?;
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        self.models.iter().map(|m| ModelKind::parse(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"dataset": "tx.csv"}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.min_interactions, 3);
        assert_eq!(c.ks, vec![10, 20]);
        assert_eq!(c.model_kinds().unwrap().len(), 8);
        assert_eq!(c.dataset_name(), "tx");
    }

    #[test]
    fn unknown_keys_rejected_everywhere() {
        for bad in [
            r#"{"dataset": "a", "epochs": 3}"#,
            r#"{"dataset": "a", "train": {"epoch": 3}}"#,
            r#"{"dataset": "a", "features": {"image": "x"}}"#,
            r#"{"dataset": "a", "grid": {"lr": [0.1], "dim": [2]}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn model_names() {
        assert_eq!(ModelKind::parse("ngcf-all").unwrap(), ModelKind::Ngcf(Variant::All));
        assert_eq!(ModelKind::parse("NGCF").unwrap(), ModelKind::Ngcf(Variant::None));
        assert_eq!(ModelKind::parse("BPR-MF").unwrap().name(), "BPR-MF");
        assert!(ModelKind::parse("neumf").is_err());
        assert!(ModelKind::parse("ngcf-none").is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"dataset": "d.json", "features": {"txt": "t.fmf"}, "out": "o"}"#).unwrap();
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.dataset, dir.path().join("d.json"));
        assert_eq!(c.features.txt.unwrap(), dir.path().join("t.fmf"));
        assert_eq!(c.out.unwrap(), dir.path().join("o"));
    }
}
