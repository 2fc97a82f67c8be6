use std::borrow::Cow;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_adjacency, node_dropout, sample_negative, Dataset, NormalizedAdjacency, Part, Split};
use crate::error::{Error, Result};
use crate::evaluation::{evaluable_users, evaluate, MetricReport};
use crate::features::FeatureBundle;
use crate::model::{final_embeddings, init_params, ModelConfig, ModelParams};
use crate::numeric::{AdamConfig, AdamState, Tensor2};
use crate::seed::SeedStreams;
use crate::training::{batch_objective, Regularization, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-pair BPR loss over the epoch (regularizer included).
    pub mean_loss: f64,
    pub batches: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validation: Option<MetricReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters scored best on validation, if validation ran.
    pub best_epoch: Option<usize>,
    /// Not serialized: reports must be byte-identical across reruns.
    pub wall_time: Duration,
}

impl TrainReport {
    /// One JSON record per epoch.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_loss)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Parameters from `report.best_epoch`.
    pub best: Option<ModelParams>,
    pub report: TrainReport,
}

impl TrainOutcome {
    /// Best-on-validation parameters when available, final otherwise.
    pub fn selected(&self) -> &ModelParams {
        self.best.as_ref().unwrap_or(&self.params)
    }
}

/// BPR training from a seeded initialization.
pub fn train(
    ds: &Dataset,
    split: &Split,
    bundle: &FeatureBundle,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let streams = SeedStreams::new(cfg.seed);
    let params = init_params(model_cfg, ds.num_users(), ds.num_items(), bundle, &mut streams.rng("init"))?;
    train_from(params, ds, split, bundle, model_cfg, cfg)
}

/// BPR training starting at `params`.
pub fn train_from(
    mut params: ModelParams,
    ds: &Dataset,
    split: &Split,
    bundle: &FeatureBundle,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model_cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Dataset("train split is empty".into()));
    }
    let started = Instant::now();
    let name = model_cfg.model_name().to_string();
    let streams = SeedStreams::new(cfg.seed);
    let mut shuffle_rng = streams.rng("shuffle");
    let mut negative_rng = streams.rng("negatives");
    let mut node_rng = streams.rng("node_dropout");
    let mut message_rng = streams.rng("message_dropout");

    let adj = build_adjacency(&split.train, ds.num_users(), ds.num_items())?;
    let mut adam = AdamState::new(AdamConfig::default(), params.tensors());
    let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let reg = Regularization {
        lambda: cfg.reg,
        weights: cfg.reg_weights,
    };

    let validate = cfg.eval_every > 0 && !evaluable_users(split, Part::Valid, ds.num_users()).0.is_empty();
    if cfg.eval_every > 0 && !validate {
        log::warn!("{name}: no evaluable validation users; validation disabled");
    }

    let mut order = split.train.clone();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut triples: Vec<(usize, usize, usize)> = Vec::with_capacity(order.len());

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        triples.clear();
        for &(u, i) in &order {
            triples.push((u, i, sample_negative(ds, u, &mut negative_rng)?));
        }
        let epoch_adj: Cow<NormalizedAdjacency> = if model_cfg.node_dropout > 0.0 {
            Cow::Owned(node_dropout(&adj, model_cfg.node_dropout, &mut node_rng)?)
        } else {
            Cow::Borrowed(&adj)
        };

        let mut total = 0.0;
        let mut batches = 0;
        for (b, chunk) in triples.chunks(cfg.batch_size).enumerate() {
            debug_assert!(
                chunk.iter().all(|&(u, _, j)| !ds.has_interaction(u, j)),
                "sampled negative is a known positive"
            );
            let diverged = |e: Error| match e {
                Error::NonFinite(msg) => Error::Diverged { epoch, batch: b, msg },
                other => other,
            };
            let rng = (model_cfg.message_dropout > 0.0).then_some(&mut message_rng);
            let out =
                batch_objective(&params, &epoch_adj, bundle, model_cfg, chunk, reg, rng).map_err(diverged)?;
            if !out.loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    msg: format!("loss is {}", out.loss),
                });
            }
            total += out.loss * chunk.len() as f64;
            batches += 1;
            let mut slots: Vec<(&str, &mut Tensor2)> =
                names.iter().map(String::as_str).zip(params.tensors_mut()).collect();
            adam.step(&mut slots, &out.grads, cfg.lr).map_err(diverged)?;
        }
        let mean_loss = total / triples.len() as f64;
        log::debug!("{name} epoch {epoch}: loss {mean_loss:.6}");

        let validation = if validate && epoch % cfg.eval_every == 0 {
            let emb = final_embeddings(&params, &adj, bundle, model_cfg)?;
            let report = evaluate(&emb, &name, split, Part::Valid, &cfg.eval_ks)?;
            let score = report.ndcg_at(cfg.select_k)?;
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, epoch, params.clone()));
            }
            Some(report)
        } else {
            None
        };
        epochs.push(EpochRecord {
            epoch,
            mean_loss,
            batches,
            validation,
        });
    }

    let (best_epoch, best_params) = match best {
        Some((_, e, p)) => (Some(e), Some(p)),
        None => (None, None),
    };
    Ok(TrainOutcome {
        params,
        best: best_params,
        report: TrainReport {
            model: name,
            seed: cfg.seed,
            epochs,
            best_epoch,
            wall_time: started.elapsed(),
        },
    })
}
