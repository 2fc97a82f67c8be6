use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::model::ModelConfig;
use crate::numeric::Tensor2;

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor2,
    pub bias: Tensor2,
}

/// Weights of one propagation layer: `W1` on the neighbor+self sum, `W2` on
/// the neighbor ⊙ self interaction term.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationLayer {
    pub w1: Tensor2,
    pub w2: Tensor2,
    pub bias: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub user_emb: Tensor2,
    /// Free item embeddings; present only for the featureless variant.
    pub item_emb: Option<Tensor2>,
    /// Input MLP from side features to layer-0 item embeddings.
    pub mlp: Vec<Linear>,
    pub layers: Vec<PropagationLayer>,
}

impl ModelParams {
    /// Tensors in canonical order with stable names. Checkpoints, Adam state
    /// and gradient lists all follow this order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut out = vec![("user_emb".to_string(), &self.user_emb)];
        if let Some(e) = &self.item_emb {
            out.push(("item_emb".into(), e));
        }
        for (k, l) in self.mlp.iter().enumerate() {
            out.push((format!("mlp.{k}.weight"), &l.weight));
            out.push((format!("mlp.{k}.bias"), &l.bias));
        }
        for (k, l) in self.layers.iter().enumerate() {
            out.push((format!("layer.{k}.w1"), &l.w1));
            out.push((format!("layer.{k}.w2"), &l.w2));
            out.push((format!("layer.{k}.bias"), &l.bias));
        }
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor2> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = vec![&mut self.user_emb];
        if let Some(e) = &mut self.item_emb {
            out.push(e);
        }
        for l in &mut self.mlp {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        for l in &mut self.layers {
            out.push(&mut l.w1);
            out.push(&mut l.w2);
            out.push(&mut l.bias);
        }
        out
    }

    /// Indices (into [`Self::named_tensors`]) of weight matrices, i.e. MLP and
    /// layer weights but not embeddings or biases.
    pub fn weight_indices(&self) -> Vec<usize> {
        self.named_tensors()
            .iter()
            .enumerate()
            .filter(|(_, (name, _))| name.ends_with(".weight") || name.ends_with(".w1") || name.ends_with(".w2"))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn num_users(&self) -> usize {
        self.user_emb.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.user_emb.cols()
    }

    /// Rebuilds params from tensors in [`Self::named_tensors`] order, using
    /// `template` only for the structure.
    pub fn from_tensors_like(template: &ModelParams, tensors: Vec<Tensor2>) -> Result<ModelParams> {
        let mut out = template.clone();
        let slots = out.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, got {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (slot, t) in slots.into_iter().zip(tensors) {
            if slot.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor shape {:?} does not match expected {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t;
        }
        Ok(out)
    }
}

/// Xavier-uniform init of all weights and embeddings, zero biases.
pub fn init_params<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    num_users: usize,
    num_items: usize,
    bundle: &FeatureBundle,
    rng: &mut R,
) -> Result<ModelParams> {
    cfg.validate()?;
    if bundle.variant() != cfg.variant {
        return Err(Error::Config(format!(
            "feature bundle variant `{}` does not match model variant `{}`",
            bundle.variant(),
            cfg.variant
        )));
    }
    let d = cfg.embedding_dim;
    let user_emb = Tensor2::xavier_uniform(num_users, d, rng);

    let (item_emb, mlp) = match bundle.matrix() {
        None => (Some(Tensor2::xavier_uniform(num_items, d, rng)), Vec::new()),
        Some(x) => {
            if x.rows() != num_items {
                return Err(Error::Shape {
                    op: "init_params(feature rows vs items)",
                    left: x.shape(),
                    right: (num_items, d),
                });
            }
            let mut widths = vec![x.cols()];
            widths.extend(&cfg.mlp_hidden);
            widths.push(d);
            let mlp = widths
                .windows(2)
                .map(|w| Linear {
                    weight: Tensor2::xavier_uniform(w[0], w[1], rng),
                    bias: Tensor2::zeros(1, w[1]),
                })
                .collect();
            (None, mlp)
        }
    };

    let layers = (0..cfg.layers)
        .map(|_| PropagationLayer {
            w1: Tensor2::xavier_uniform(d, d, rng),
            w2: Tensor2::xavier_uniform(d, d, rng),
            bias: Tensor2::zeros(1, d),
        })
        .collect();

    Ok(ModelParams {
        user_emb,
        item_emb,
        mlp,
        layers,
    })
}
