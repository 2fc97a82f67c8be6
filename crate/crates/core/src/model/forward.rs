use std::sync::Arc;

use rand::Rng;

use crate::dataset::NormalizedAdjacency;
use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::model::{Embeddings, ModelConfig, ModelParams};
use crate::numeric::{SparseMatrix, Tape, Var};

/// Tape handles for every parameter, in [`ModelParams::named_tensors`] order.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub all: Vec<Var>,
    pub user_emb: Var,
    pub item_emb: Option<Var>,
    pub mlp: Vec<(Var, Var)>,
    pub layers: Vec<LayerVars>,
}

#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub w1: Var,
    pub w2: Var,
    pub bias: Var,
}

pub fn register_params(tape: &mut Tape, p: &ModelParams) -> ParamVars {
    let mut all = Vec::new();
    let mut reg = |tape: &mut Tape, t: &crate::numeric::Tensor2| {
        let v = tape.param(t.clone());
        all.push(v);
        v
    };
    let user_emb = reg(tape, &p.user_emb);
    let item_emb = p.item_emb.as_ref().map(|e| reg(tape, e));
    let mlp = p
        .mlp
        .iter()
        .map(|l| (reg(tape, &l.weight), reg(tape, &l.bias)))
        .collect();
    let layers = p
        .layers
        .iter()
        .map(|l| LayerVars {
            w1: reg(tape, &l.w1),
            w2: reg(tape, &l.w2),
            bias: reg(tape, &l.bias),
        })
        .collect();
    ParamVars {
        all,
        user_emb,
        item_emb,
        mlp,
        layers,
    }
}

/// Layer-0 item embeddings: the free table for the featureless variant,
/// otherwise `MLP(X*)` (linear → leaky-relu → ... → linear).
pub fn item_embeddings_0(tape: &mut Tape, pv: &ParamVars, features: Option<Var>, slope: f64) -> Result<Var> {
    match (pv.item_emb, features) {
        (Some(e), _) => Ok(e),
        (None, Some(x)) => {
            if pv.mlp.is_empty() {
                return Err(Error::Config("feature variant without an input MLP".into()));
            }
            let mut h = x;
            for (k, &(w, b)) in pv.mlp.iter().enumerate() {
                let z = tape.matmul(h, w)?;
                h = tape.add_row(z, b)?;
                if k + 1 < pv.mlp.len() {
                    h = tape.leaky_relu(h, slope)?;
                }
            }
            Ok(h)
        }
        (None, None) => Err(Error::Config("model needs either item embeddings or item features".into())),
    }
}

/// One propagation round over stacked user+item rows:
/// `leaky_relu((A + I) e W1 + ((A e) ⊙ e) W2 + b)`, followed by message
/// dropout when `dropout` is given.
pub fn propagate<R: Rng + ?Sized>(
    tape: &mut Tape,
    e: Var,
    adj: &Arc<SparseMatrix>,
    layer: LayerVars,
    slope: f64,
    dropout: Option<(f64, &mut R)>,
) -> Result<Var> {
    let side = tape.sparse_matmul(adj, e)?;
    let with_self = tape.add(side, e)?;
    let sum_term = tape.matmul(with_self, layer.w1)?;
    let inter = tape.mul(side, e)?;
    let inter_term = tape.matmul(inter, layer.w2)?;
    let pre = tape.add(sum_term, inter_term)?;
    let pre = tape.add_row(pre, layer.bias)?;
    let out = tape.leaky_relu(pre, slope)?;
    match dropout {
        Some((ratio, rng)) if ratio > 0.0 => tape.dropout(out, ratio, rng),
        _ => Ok(out),
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub params: ParamVars,
    /// Stacked layer-0 embeddings, users then items.
    pub e0: Var,
    /// `e(0) ∥ e(1) ∥ ... ∥ e(L)`, `(N + M) × (L + 1)·d`.
    pub final_emb: Var,
}

/// Full forward pass on `tape`. Message dropout is applied only when
/// `dropout_rng` is provided.
pub fn forward<R: Rng + ?Sized>(
    tape: &mut Tape,
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
    mut dropout_rng: Option<&mut R>,
) -> Result<ForwardOutput> {
    if params.layers.len() != cfg.layers {
        return Err(Error::Config(format!(
            "params have {} propagation layers, config says {}",
            params.layers.len(),
            cfg.layers
        )));
    }
    if adj.num_users() != params.num_users() {
        return Err(Error::Shape {
            op: "forward(adjacency vs user embeddings)",
            left: (adj.num_nodes(), adj.num_nodes()),
            right: params.user_emb.shape(),
        });
    }
    let pv = register_params(tape, params);
    let features = bundle.matrix().map(|x| tape.constant(x.clone()));
    let items = item_embeddings_0(tape, &pv, features, cfg.leaky_slope)?;
    if tape.value(items).rows() != adj.num_items() {
        return Err(Error::Shape {
            op: "forward(adjacency vs item embeddings)",
            left: (adj.num_nodes(), adj.num_nodes()),
            right: tape.value(items).shape(),
        });
    }
    let e0 = tape.concat_rows(&[pv.user_emb, items])?;

    let mut outputs = vec![e0];
    let mut e = e0;
    for &layer in &pv.layers {
        let drop = dropout_rng.as_deref_mut().map(|r| (cfg.message_dropout, r));
        e = propagate(tape, e, adj.matrix(), layer, cfg.leaky_slope, drop)?;
        outputs.push(e);
    }
    let final_emb = if outputs.len() == 1 {
        e0
    } else {
        tape.concat_cols(&outputs)?
    };
    Ok(ForwardOutput {
        params: pv,
        e0,
        final_emb,
    })
}

/// Inference-mode final embeddings (no dropout).
pub fn final_embeddings(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    bundle: &FeatureBundle,
    cfg: &ModelConfig,
) -> Result<Embeddings> {
    let mut tape = Tape::new();
    let out = forward::<rand_chacha::ChaCha8Rng>(&mut tape, params, adj, bundle, cfg, None)?;
    Embeddings::new(adj.num_users(), tape.value(out.final_emb).clone())
}
