use crate::dataset::{Dataset, Split};
use crate::error::Result;
use crate::features::{FeatureBundle, Variant};
use crate::model::ModelConfig;
use crate::training::{train, TrainConfig, TrainOutcome};

/// Matrix factorization: free user and item tables, no propagation, no MLP.
pub fn bprmf_config(embedding_dim: usize) -> ModelConfig {
    ModelConfig {
        embedding_dim,
        layers: 0,
        node_dropout: 0.0,
        message_dropout: 0.0,
        variant: Variant::None,
        mlp_hidden: Vec::new(),
        ..ModelConfig::default()
    }
}

/// BPR-MF through the shared BPR/Adam loop.
pub fn bprmf_train(ds: &Dataset, split: &Split, embedding_dim: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train(ds, split, &FeatureBundle::empty(), &bprmf_config(embedding_dim), cfg)
}
