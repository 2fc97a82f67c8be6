use rayon::prelude::*;

use crate::dataset::{Part, Split};
use crate::error::{Error, Result};
use crate::evaluation::{ndcg_at_k, recall_at_k, MetricReport};
use crate::model::{top_k, Scorer};

/// Users held out in `part`, split into those that can be evaluated (at least
/// one train interaction) and the count of those that cannot.
pub fn evaluable_users(split: &Split, part: Part, num_users: usize) -> (Vec<usize>, usize) {
    let mut held = vec![false; num_users];
    let mut trained = vec![false; num_users];
    for &(u, _) in split.part(part) {
        held[u] = true;
    }
    for &(u, _) in &split.train {
        trained[u] = true;
    }
    let mut users = Vec::new();
    let mut excluded = 0;
    for u in 0..num_users {
        if held[u] {
            if trained[u] {
                users.push(u);
            } else {
                excluded += 1;
            }
        }
    }
    (users, excluded)
}

/// Full-ranking evaluation: for each evaluable user every item except their
/// train items is scored, and Recall/NDCG at each K are averaged.
///
/// Only train interactions influence the ranking; held-out items are used
/// purely as ground truth.
pub fn evaluate(scorer: &dyn Scorer, model: &str, split: &Split, part: Part, ks: &[usize]) -> Result<MetricReport> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidArgument("K list must be nonempty and positive".into()));
    }
    if part == Part::Train {
        return Err(Error::InvalidArgument("evaluation part must be valid or test".into()));
    }
    let n = scorer.num_users();
    let train = split.user_lists(Part::Train, n);
    let truth = split.user_lists(part, n);
    let (users, excluded) = evaluable_users(split, part, n);
    if users.is_empty() {
        return Err(Error::Dataset(format!(
            "no evaluable users ({excluded} held-out users lack train interactions)"
        )));
    }
    let k_max = *ks.iter().max().expect("nonempty");

    let per_user: Vec<Result<Vec<(f64, f64)>>> = users
        .par_iter()
        .map_init(
            || vec![0.0; scorer.num_items()],
            |scores, &u| {
                scorer.score_items(u, scores);
                let seen = &train[u];
                let ranked = top_k(scores, k_max, |i| seen.binary_search(&i).is_ok());
                ks.iter()
                    .map(|&k| Ok((recall_at_k(&ranked, &truth[u], k)?, ndcg_at_k(&ranked, &truth[u], k)?)))
                    .collect()
            },
        )
        .collect();

    // Summed in user order so the result does not depend on thread count.
    let mut recall = vec![0.0; ks.len()];
    let mut ndcg = vec![0.0; ks.len()];
    for row in per_user {
        for (n, (r, g)) in row?.into_iter().enumerate() {
            recall[n] += r;
            ndcg[n] += g;
        }
    }
    let count = users.len() as f64;
    recall.iter_mut().for_each(|v| *v /= count);
    ndcg.iter_mut().for_each(|v| *v /= count);
    Ok(MetricReport {
        model: model.to_string(),
        ks: ks.to_vec(),
        recall,
        ndcg,
        evaluated_users: users.len(),
        excluded_users: excluded,
    })
}
