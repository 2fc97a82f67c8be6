use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Variant;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub layers: usize,
    pub node_dropout: f64,
    pub message_dropout: f64,
    pub variant: Variant,
    pub leaky_slope: f64,
    /// Hidden widths of the input MLP; the output width is `embedding_dim`.
    pub mlp_hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 64,
            layers: 3,
            node_dropout: 0.0,
            message_dropout: 0.0,
            variant: Variant::None,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            mlp_hidden: vec![512, 256],
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be at least 1".into()));
        }
        for (name, r) in [("node_dropout", self.node_dropout), ("message_dropout", self.message_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Config(format!("{name} {r} outside [0, 1)")));
            }
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::Config("leaky_slope must be finite".into()));
        }
        if self.mlp_hidden.contains(&0) {
            return Err(Error::Config("mlp_hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Display name: the featureless model without propagation is plain
    /// matrix factorization.
    pub fn model_name(&self) -> &'static str {
        if self.layers == 0 && self.variant == Variant::None {
            "BPR-MF"
        } else {
            self.variant.model_name()
        }
    }

    /// Width of the concatenated final embedding, `(L + 1) · d`.
    pub fn final_width(&self) -> usize {
        (self.layers + 1) * self.embedding_dim
    }
}
