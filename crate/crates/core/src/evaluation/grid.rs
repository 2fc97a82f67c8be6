use serde::{Deserialize, Serialize};

use crate::dataset::{build_adjacency, Dataset, Part, Split};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricReport};
use crate::features::FeatureBundle;
use crate::model::{final_embeddings, ModelConfig};
use crate::training::{train, TrainConfig};

/// K used to rank grid configurations.
pub const GRID_SELECT_K: usize = 20;

/// Candidate values per hyperparameter; the grid is their cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub lr: Vec<f64>,
    pub node_dropout: Vec<f64>,
    pub message_dropout: Vec<f64>,
    pub reg: Vec<f64>,
    pub layers: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lr: vec![0.01, 0.001],
            node_dropout: vec![0.0],
            message_dropout: vec![0.0],
            reg: vec![1e-5, 1e-3],
            layers: vec![3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// Position in enumeration order (lr outermost, layers innermost).
    pub index: usize,
    pub label: String,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    pub index: usize,
    pub label: String,
    pub lr: f64,
    pub node_dropout: f64,
    pub message_dropout: f64,
    pub reg: f64,
    pub layers: usize,
    pub metrics: MetricReport,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("lr", self.lr.is_empty()),
            ("node_dropout", self.node_dropout.is_empty()),
            ("message_dropout", self.message_dropout.is_empty()),
            ("reg", self.reg.is_empty()),
            ("layers", self.layers.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((axis, _)) => Err(Error::Config(format!("grid axis `{axis}` is empty"))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.lr.len() * self.node_dropout.len() * self.message_dropout.len() * self.reg.len() * self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every configuration, applied on top of the fixed `model` / `train`.
    pub fn points(&self, model: &ModelConfig, train: &TrainConfig) -> Result<Vec<GridPoint>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.lr {
            for &nd in &self.node_dropout {
                for &md in &self.message_dropout {
                    for &reg in &self.reg {
                        for &layers in &self.layers {
                            let m = ModelConfig {
                                node_dropout: nd,
                                message_dropout: md,
                                layers,
                                ..model.clone()
                            };
                            let t = TrainConfig { lr, reg, ..train.clone() };
                            m.validate()?;
                            t.validate()?;
                            out.push(GridPoint {
                                index: out.len(),
                                label: format!("lr={lr} node_dropout={nd} message_dropout={md} reg={reg} layers={layers}"),
                                model: m,
                                train: t,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Scores each point with `evaluator` and orders the records by NDCG@20
/// descending, then Recall@20 descending, then enumeration order.
pub fn grid_search_with(
    points: &[GridPoint],
    mut evaluator: impl FnMut(&GridPoint) -> Result<MetricReport>,
) -> Result<Vec<GridRecord>> {
    if points.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    let mut scored = Vec::with_capacity(points.len());
    for p in points {
        let wrap = |e: Error| Error::Grid {
            index: p.index,
            label: p.label.clone(),
            source: Box::new(e),
        };
        let metrics = evaluator(p).map_err(wrap)?;
        let key = (
            metrics.ndcg_at(GRID_SELECT_K).map_err(wrap)?,
            metrics.recall_at(GRID_SELECT_K).map_err(wrap)?,
        );
        scored.push((key, GridRecord {
            index: p.index,
            label: p.label.clone(),
            lr: p.train.lr,
            node_dropout: p.model.node_dropout,
            message_dropout: p.model.message_dropout,
            reg: p.train.reg,
            layers: p.model.layers,
            metrics,
        }));
    }
    // Stable sort keeps enumeration order among exact ties.
    scored.sort_by(|(a, _), (b, _)| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    Ok(scored.into_iter().map(|(_, r)| r).collect())
}

/// Trains every configuration and ranks it on the validation split. Each
/// configuration uses the same seed, so runs differ only in hyperparameters.
pub fn grid_search(
    spec: &GridSpec,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    ds: &Dataset,
    split: &Split,
    bundle: &FeatureBundle,
    ks: &[usize],
) -> Result<Vec<GridRecord>> {
    if !ks.contains(&GRID_SELECT_K) {
        return Err(Error::Config(format!("grid search needs K={GRID_SELECT_K} in the K list")));
    }
    let points = spec.points(model, train_cfg)?;
    let adj = build_adjacency(&split.train, ds.num_users(), ds.num_items())?;
    grid_search_with(&points, |p| {
        log::info!("grid {}/{}: {}", p.index + 1, points.len(), p.label);
        let outcome = train(ds, split, bundle, &p.model, &p.train)?;
        let emb = final_embeddings(outcome.selected(), &adj, bundle, &p.model)?;
        evaluate(&emb, p.model.model_name(), split, Part::Valid, ks)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock(ndcg: f64, recall: f64) -> MetricReport {
        MetricReport {
            model: "m".into(),
            ks: vec![20],
            recall: vec![recall],
            ndcg: vec![ndcg],
            evaluated_users: 1,
            excluded_users: 0,
        }
    }

    #[test]
    fn enumeration_order_and_size() {
        let spec = GridSpec {
            lr: vec![0.01, 0.001],
            layers: vec![1, 2],
            ..GridSpec::default()
        };
        let spec = GridSpec { reg: vec![1e-5], ..spec };
        let pts = spec.points(&ModelConfig::default(), &TrainConfig::default()).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[0].train.lr, pts[0].model.layers), (0.01, 1));
        assert_eq!((pts[1].train.lr, pts[1].model.layers), (0.01, 2));
        assert_eq!((pts[2].train.lr, pts[2].model.layers), (0.001, 1));
        assert!(pts.iter().enumerate().all(|(k, p)| p.index == k));
    }

    #[test]
    fn empty_axis_rejected() {
        let spec = GridSpec {
            layers: vec![],
            ..GridSpec::default()
        };
        let err = spec.points(&ModelConfig::default(), &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("layers"));
        assert!(grid_search_with(&[], |_| Ok(mock(0.0, 0.0))).is_err());
    }

    #[test]
    fn mock_evaluator_ordering() {
        let spec = GridSpec {
            lr: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            reg: vec![0.0],
            ..GridSpec::default()
        };
        let pts = spec.points(&ModelConfig::default(), &TrainConfig::default()).unwrap();
        // (ndcg, recall) per point; index 1 and 3 tie on both keys.
        let table = [(0.2, 0.5), (0.3, 0.1), (0.2, 0.6), (0.3, 0.1), (0.4, 0.0)];
        let recs = grid_search_with(&pts, |p| Ok(mock(table[p.index].0, table[p.index].1))).unwrap();
        let order: Vec<usize> = recs.iter().map(|r| r.index).collect();
        assert_eq!(order, vec![4, 1, 3, 2, 0]);
        assert_eq!(recs[0].lr, 0.5);
    }

    #[test]
    fn singleton_grid_and_error_identification() {
        let spec = GridSpec {
            lr: vec![0.01],
            reg: vec![1e-5],
            ..GridSpec::default()
        };
        let pts = spec.points(&ModelConfig::default(), &TrainConfig::default()).unwrap();
        let recs = grid_search_with(&pts, |_| Ok(mock(0.25, 0.5))).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].metrics.ndcg, vec![0.25]);

        let err = grid_search_with(&pts, |_| Err(Error::Config("boom".into()))).unwrap_err();
        match err {
            Error::Grid { index, label, .. } => {
                assert_eq!(index, 0);
                assert!(label.contains("lr=0.01"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
