use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Scorer;
use crate::numeric::SparseMatrix;

pub const DEFAULT_KNN_NEIGHBORS: usize = 100;

/// Cosine similarity of binary item vectors over train buyers, plus each
/// item's `k` most similar other items.
#[derive(Debug, Clone)]
pub struct ItemSimilarity {
    k: usize,
    full: SparseMatrix,
    /// Per item: up to `k` `(item, sim)` pairs, descending sim, ties by index.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl ItemSimilarity {
    pub fn build(train: &[(usize, usize)], num_users: usize, num_items: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("ItemKNN needs k ≥ 1".into()));
        }
        let mut by_user = vec![Vec::new(); num_users];
        let mut degree = vec![0usize; num_items];
        for &(u, i) in train {
            if u >= num_users || i >= num_items {
                return Err(Error::InvalidArgument(format!("interaction ({u}, {i}) out of range")));
            }
            by_user[u].push(i);
            degree[i] += 1;
        }
        let mut co: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); num_items];
        for items in &mut by_user {
            items.sort_unstable();
            items.dedup();
            for (a, &i) in items.iter().enumerate() {
                for &j in &items[a + 1..] {
                    *co[i].entry(j).or_default() += 1;
                    *co[j].entry(i).or_default() += 1;
                }
            }
        }
        let rows: Vec<Vec<(usize, f64)>> = co
            .par_iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .map(|(&j, &c)| (j, c as f64 / ((degree[i] * degree[j]) as f64).sqrt()))
                    .collect()
            })
            .collect();
        let triplets: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, s)| (i, j, s)))
            .collect();
        let full = SparseMatrix::from_triplets(num_items, num_items, &triplets)?;
        let neighbors = rows
            .into_par_iter()
            .map(|mut row| {
                row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                row.truncate(k);
                row
            })
            .collect();
        Ok(ItemSimilarity { k, full, neighbors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Untruncated similarity matrix; symmetric with an empty diagonal.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.full
    }

    pub fn sim(&self, i: usize, j: usize) -> f64 {
        self.full.get(i, j)
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }
}

/// Item-based KNN: `score(u, i) = Σ sim(i, j)` over the user's train items
/// `j` that are among `i`'s top-k neighbors.
#[derive(Debug, Clone)]
pub struct ItemKnn {
    sim: ItemSimilarity,
    /// `reverse[j]` lists `(i, sim)` for every item `i` having `j` as a neighbor.
    reverse: Vec<Vec<(usize, f64)>>,
    train: Vec<Vec<usize>>,
}

impl ItemKnn {
    pub fn fit(train: &[(usize, usize)], num_users: usize, num_items: usize, k: usize) -> Result<Self> {
        let sim = ItemSimilarity::build(train, num_users, num_items, k)?;
        let mut reverse = vec![Vec::new(); num_items];
        for i in 0..num_items {
            for &(j, s) in sim.neighbors(i) {
                reverse[j].push((i, s));
            }
        }
        let mut lists = vec![Vec::new(); num_users];
        for &(u, i) in train {
            lists[u].push(i);
        }
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
        }
        Ok(ItemKnn {
            sim,
            reverse,
            train: lists,
        })
    }

    pub fn similarity(&self) -> &ItemSimilarity {
        &self.sim
    }
}

impl Scorer for ItemKnn {
    fn num_users(&self) -> usize {
        self.train.len()
    }

    fn num_items(&self) -> usize {
        self.reverse.len()
    }

    fn score_items(&self, user: usize, out: &mut [f64]) {
        out.fill(0.0);
        for &j in &self.train[user] {
            for &(i, s) in &self.reverse[j] {
                out[i] += s;
            }
        }
    }
}

pub fn itemknn_scores(knn: &ItemKnn, user: usize) -> Vec<f64> {
    let mut out = vec![0.0; knn.num_items()];
    knn.score_items(user, &mut out);
    out
}
