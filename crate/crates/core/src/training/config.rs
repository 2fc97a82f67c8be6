use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    /// λ in `mean(-ln σ(ŷ_ui - ŷ_uj)) + λ · penalty / B`.
    pub reg: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Validate every this many epochs; 0 disables validation.
    pub eval_every: usize,
    /// K list used for validation; model selection uses NDCG at `select_k`.
    pub eval_ks: Vec<usize>,
    pub select_k: usize,
    /// Also penalize propagation and MLP weight matrices, not only the
    /// layer-0 embeddings touched by the batch.
    pub reg_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            reg: 1e-5,
            batch_size: 2048,
            epochs: 50,
            seed: 0,
            eval_every: 10,
            eval_ks: vec![10, 20],
            select_k: 20,
            reg_weights: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr {} must be positive", self.lr)));
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return Err(Error::Config(format!("reg {} must be non-negative", self.reg)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every > 0 {
            if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
                return Err(Error::Config("eval_ks must be nonempty and positive".into()));
            }
            if !self.eval_ks.contains(&self.select_k) {
                return Err(Error::Config(format!("select_k {} is not in eval_ks", self.select_k)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!((c.batch_size, c.epochs), (2048, 50));
        for bad in [
            TrainConfig { lr: 0.0, ..c.clone() },
            TrainConfig { reg: -1.0, ..c.clone() },
            TrainConfig { batch_size: 0, ..c.clone() },
            TrainConfig { select_k: 5, ..c.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
