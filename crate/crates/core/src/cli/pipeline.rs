use std::path::{Path, PathBuf};

use crate::cli::RunConfig;
use crate::dataset::{build_dataset, ingest_transactions, split_dataset, Dataset, Split};
use crate::error::{Error, Result};
use crate::features::{assemble_bundle, load_feature_file, BundleOptions, FeatureBundle, FeatureKind, FeatureSources, Variant};
use crate::seed::SeedStreams;

/// Dataset and split shared by every command that trains or evaluates.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ds: Dataset,
    pub split: Split,
    pub streams: SeedStreams,
}

impl Prepared {
    /// Seed handed to every training run of this invocation.
    pub fn train_seed(&self) -> u64 {
        self.streams.derive("train")
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = &cfg.dataset;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let log = ingest_transactions(path)?;
        build_dataset(&log, cfg.min_interactions)
    } else {
        Dataset::load(path)
    }
}

pub fn prepare(cfg: &RunConfig, root_seed: u64) -> Result<Prepared> {
    let ds = load_dataset(cfg)?;
    let streams = SeedStreams::new(root_seed);
    let split = split_dataset(&ds, cfg.split, streams.derive("split"))?;
    Ok(Prepared { ds, split, streams })
}

/// Loads the feature files `variant` needs and assembles them in dataset
/// item order, standardized on train items when configured.
pub fn load_bundle(cfg: &RunConfig, prep: &Prepared, variant: Variant) -> Result<FeatureBundle> {
    if !variant.uses_features() {
        return Ok(FeatureBundle::empty());
    }
    let paths = &cfg.features;
    let mut loaded = [None, None, None];
    for &kind in variant.modalities() {
        let (slot, path): (usize, &Option<PathBuf>) = match kind {
            FeatureKind::Img => (0, &paths.img),
            FeatureKind::Txt => (1, &paths.txt),
            FeatureKind::Price => (2, &paths.price),
        };
        let path = path.as_deref().ok_or_else(|| {
            Error::Config(format!(
                "variant `{variant}` needs the {kind} feature file (set features.{})",
                kind.name()
            ))
        })?;
        loaded[slot] = Some(load_feature_file(path)?);
    }
    let sources = FeatureSources {
        img: loaded[0].as_ref(),
        txt: loaded[1].as_ref(),
        price: loaded[2].as_ref(),
    };
    let opts = BundleOptions {
        missing: cfg.missing_features,
        price_dim: cfg.price_dim,
    };
    let mut bundle = assemble_bundle(&prep.ds, variant, sources, opts)?;
    if cfg.standardize {
        let mut items: Vec<usize> = prep.split.train.iter().map(|&(_, i)| i).collect();
        items.sort_unstable();
        items.dedup();
        bundle.standardize(&items)?;
    }
    Ok(bundle)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
