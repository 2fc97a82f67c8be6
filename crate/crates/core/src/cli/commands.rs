use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::baselines::{bprmf_config, ItemKnn, Pop};
use crate::cli::pipeline::{ensure_dir, load_bundle, prepare, write_file, Prepared};
use crate::cli::{ModelKind, RunConfig};
use crate::dataset::{build_adjacency, build_dataset, ingest_transactions, stats_table, Part};
use crate::error::{Error, Result};
use crate::evaluation::{comparison_table, evaluate, grid_search, GridRecord, MetricReport, GRID_SELECT_K};
use crate::features::FeatureBundle;
use crate::model::{final_embeddings, recommend_topk, Checkpoint, Embeddings, ModelConfig, ModelParams};
use crate::training::{train, TrainConfig, TrainOutcome};

fn out_text(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn cmd_ingest(csv: &Path, min_interactions: usize, name: Option<&str>, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let log = ingest_transactions(csv)?;
    log::info!("{}: {} transactions", csv.display(), log.len());
    let ds = build_dataset(&log, min_interactions)?;
    ensure_dir(dir)?;
    ds.save(dir.join("dataset.json"))?;
    let label = name
        .map(String::from)
        .or_else(|| csv.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "dataset".into());
    let table = stats_table(&[(label.as_str(), &ds)]);
    write_file(&dir.join("stats.txt"), &table)?;
    out_text(out, &table)
}

fn train_cfg(cfg: &RunConfig, prep: &Prepared) -> TrainConfig {
    TrainConfig {
        seed: prep.train_seed(),
        ..cfg.train.clone()
    }
}

fn embeddings(prep: &Prepared, params: &ModelParams, bundle: &FeatureBundle, model: &ModelConfig) -> Result<Embeddings> {
    let adj = build_adjacency(&prep.split.train, prep.ds.num_users(), prep.ds.num_items())?;
    final_embeddings(params, &adj, bundle, model)
}

fn checkpoint(model: &ModelConfig, prep: &Prepared, bundle: &FeatureBundle, epoch: usize, params: &ModelParams) -> Checkpoint {
    Checkpoint {
        config: model.clone(),
        num_items: prep.ds.num_items(),
        feature_width: bundle.width(),
        seed: prep.streams.root(),
        epoch,
        params: params.clone(),
    }
}

pub fn cmd_train(cfg: &RunConfig, seed: u64, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(cfg, seed)?;
    let bundle = load_bundle(cfg, &prep, cfg.model.variant)?;
    let tc = train_cfg(cfg, &prep);
    let outcome: TrainOutcome = train(&prep.ds, &prep.split, &bundle, &cfg.model, &tc)?;
    log::info!(
        "{}: {} epochs in {:.2?}",
        outcome.report.model,
        outcome.report.epochs.len(),
        outcome.report.wall_time
    );

    ensure_dir(dir)?;
    let digest = checkpoint(&cfg.model, &prep, &bundle, tc.epochs, &outcome.params).save(dir.join("model.json"))?;
    if let (Some(best), Some(epoch)) = (&outcome.best, outcome.report.best_epoch) {
        checkpoint(&cfg.model, &prep, &bundle, epoch, best).save(dir.join("best.json"))?;
    }
    write_file(&dir.join("train_report.jsonl"), outcome.report.to_jsonl()?)?;

    let emb = embeddings(&prep, outcome.selected(), &bundle, &cfg.model)?;
    let report = evaluate(&emb, &outcome.report.model, &prep.split, Part::Test, &cfg.ks)?;
    write_file(&dir.join("metrics.json"), to_json(&report)?)?;
    let tables = metric_tables(&cfg.dataset_name(), std::slice::from_ref(&report), &cfg.ks)?;
    write_file(&dir.join("metrics.txt"), &tables)?;
    out_text(out, &format!("checkpoint {} (sha256 {digest})\n", dir.join("model.json").display()))?;
    out_text(out, &tables)
}

fn metric_tables(dataset: &str, reports: &[MetricReport], ks: &[usize]) -> Result<String> {
    let mut text = String::new();
    for &k in ks {
        text.push_str(&comparison_table(&[(dataset, reports)], k)?);
        text.push('\n');
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct EvaluationFile<'a> {
    dataset: &'a str,
    split: &'a str,
    reports: &'a [MetricReport],
}

fn evaluate_kind(kind: ModelKind, cfg: &RunConfig, prep: &Prepared) -> Result<MetricReport> {
    let (ds, split) = (&prep.ds, &prep.split);
    let name = kind.name();
    match kind {
        ModelKind::Pop => evaluate(&Pop::fit(&split.train, ds.num_users(), ds.num_items())?, name, split, Part::Test, &cfg.ks),
        ModelKind::ItemKnn => {
            let knn = ItemKnn::fit(&split.train, ds.num_users(), ds.num_items(), cfg.knn_neighbors)?;
            evaluate(&knn, name, split, Part::Test, &cfg.ks)
        }
        ModelKind::BprMf => {
            let model = bprmf_config(cfg.model.embedding_dim);
            let outcome = train(ds, split, &FeatureBundle::empty(), &model, &train_cfg(cfg, prep))?;
            let emb = embeddings(prep, outcome.selected(), &FeatureBundle::empty(), &model)?;
            evaluate(&emb, name, split, Part::Test, &cfg.ks)
        }
        ModelKind::Ngcf(variant) => {
            let model = ModelConfig {
                variant,
                ..cfg.model.clone()
            };
            let bundle = load_bundle(cfg, prep, variant)?;
            let outcome = train(ds, split, &bundle, &model, &train_cfg(cfg, prep))?;
            let emb = embeddings(prep, outcome.selected(), &bundle, &model)?;
            evaluate(&emb, name, split, Part::Test, &cfg.ks)
        }
    }
}

pub fn cmd_evaluate(cfg: &RunConfig, seed: u64, checkpoint_path: Option<&Path>, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let reports = match checkpoint_path {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let (prep, bundle) = restore(cfg, &ck)?;
            let emb = embeddings(&prep, &ck.params, &bundle, &ck.config)?;
            vec![evaluate(&emb, ck.config.model_name(), &prep.split, Part::Test, &cfg.ks)?]
        }
        None => {
            let prep = prepare(cfg, seed)?;
            let kinds = cfg.model_kinds()?;
            // Check feature files up front so a missing one fails before any training.
            for &k in &kinds {
                if let ModelKind::Ngcf(v) = k {
                    load_bundle(cfg, &prep, v)?;
                }
            }
            kinds
                .into_iter()
                .map(|k| {
                    log::info!("evaluating {}", k.name());
                    evaluate_kind(k, cfg, &prep)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let name = cfg.dataset_name();
    ensure_dir(dir)?;
    let file = EvaluationFile {
        dataset: &name,
        split: "test",
        reports: &reports,
    };
    write_file(&dir.join("evaluation.json"), to_json(&file)?)?;
    let tables = metric_tables(&name, &reports, &cfg.ks)?;
    write_file(&dir.join("evaluation.txt"), &tables)?;
    out_text(out, &tables)
}

fn grid_table(records: &[GridRecord]) -> Result<String> {
    let mut rows = vec![[
        "Rank".to_string(),
        format!("NDCG@{GRID_SELECT_K}"),
        format!("Recall@{GRID_SELECT_K}"),
        "Configuration".to_string(),
    ]];
    for (r, rec) in records.iter().enumerate() {
        rows.push([
            (r + 1).to_string(),
            format!("{:.4}", rec.metrics.ndcg_at(GRID_SELECT_K)?),
            format!("{:.4}", rec.metrics.recall_at(GRID_SELECT_K)?),
            rec.label.clone(),
        ]);
    }
    let widths: Vec<usize> = (0..4).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut text = String::new();
    for row in &rows {
        let line = format!(
            "{:>w0$}  {:>w1$}  {:>w2$}  {}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
        text.push_str(line.trim_end());
        text.push('\n');
    }
    Ok(text)
}

pub fn cmd_grid(cfg: &RunConfig, seed: u64, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(cfg, seed)?;
    let bundle = load_bundle(cfg, &prep, cfg.model.variant)?;
    let records = grid_search(&cfg.grid, &cfg.model, &train_cfg(cfg, &prep), &prep.ds, &prep.split, &bundle, &cfg.ks)?;
    ensure_dir(dir)?;
    write_file(&dir.join("grid.json"), to_json(&records)?)?;
    let table = grid_table(&records)?;
    write_file(&dir.join("grid.txt"), &table)?;
    out_text(out, &table)
}

/// Rebuilds the dataset split and feature bundle a checkpoint was trained on.
fn restore(cfg: &RunConfig, ck: &Checkpoint) -> Result<(Prepared, FeatureBundle)> {
    let prep = prepare(cfg, ck.seed)?;
    if prep.ds.num_users() != ck.params.num_users() || prep.ds.num_items() != ck.num_items {
        return Err(Error::Checkpoint(format!(
            "checkpoint covers {} users / {} items, dataset has {} / {}",
            ck.params.num_users(),
            ck.num_items,
            prep.ds.num_users(),
            prep.ds.num_items()
        )));
    }
    let bundle = load_bundle(cfg, &prep, ck.config.variant)?;
    if bundle.width() != ck.feature_width {
        return Err(Error::Checkpoint(format!(
            "checkpoint expects {} feature columns, configured files give {}",
            ck.feature_width,
            bundle.width()
        )));
    }
    Ok((prep, bundle))
}

#[derive(Debug, Serialize)]
struct Recommendation<'a> {
    rank: usize,
    token_id: &'a str,
    score: f64,
}

/// A trained checkpoint restored against its run configuration, ready to
/// serve top-K queries.
pub struct Recommender {
    prep: Prepared,
    emb: Embeddings,
    seen: Vec<Vec<usize>>,
    model: &'static str,
}

impl Recommender {
    pub fn open(cfg: &RunConfig, checkpoint_path: &Path) -> Result<Recommender> {
        let ck = Checkpoint::load(checkpoint_path)?;
        let (prep, bundle) = restore(cfg, &ck)?;
        let emb = embeddings(&prep, &ck.params, &bundle, &ck.config)?;
        let seen = prep.split.user_lists(Part::Train, prep.ds.num_users());
        Ok(Recommender {
            prep,
            emb,
            seen,
            model: ck.config.model_name(),
        })
    }

    pub fn model_name(&self) -> &'static str {
        self.model
    }

    pub fn dataset(&self) -> &crate::dataset::Dataset {
        &self.prep.ds
    }

    pub fn embeddings(&self) -> &Embeddings {
        &self.emb
    }

    /// Top-`k` `(item, score)` pairs for user index `u`, excluding its train
    /// items.
    pub fn recommend(&self, u: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if u >= self.prep.ds.num_users() {
            return Err(Error::InvalidArgument(format!(
                "user index {u} out of range for {} users",
                self.prep.ds.num_users()
            )));
        }
        Ok(recommend_topk(&self.emb, u, k, &self.seen[u]))
    }

    pub fn recommend_wallet(&self, wallet: &str, k: usize) -> Result<Vec<(usize, f64)>> {
        let u = self
            .prep
            .ds
            .user_index(wallet)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown user `{wallet}`")))?;
        self.recommend(u, k)
    }
}

pub fn cmd_recommend(cfg: &RunConfig, checkpoint_path: &Path, user: &str, k: usize, json: bool, out: &mut dyn Write) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let rec = Recommender::open(cfg, checkpoint_path)?;
    let recs: Vec<Recommendation> = rec
        .recommend_wallet(user, k)?
        .into_iter()
        .enumerate()
        .map(|(r, (i, score))| Recommendation {
            rank: r + 1,
            token_id: rec.dataset().item_id(i),
            score,
        })
        .collect();
    if json {
        return out_text(out, &to_json(&recs)?);
    }
    let width = recs.iter().map(|r| r.token_id.len()).max().unwrap_or(0).max(8);
    let mut text = format!("{:>4}  {:<width$}  {:>12}\n", "rank", "token_id", "score");
    for r in &recs {
        text.push_str(&format!("{:>4}  {:<width$}  {:>12.6}\n", r.rank, r.token_id, r.score));
    }
    out_text(out, &text)
}

pub fn default_out(cfg: Option<&RunConfig>, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("out"))
}
