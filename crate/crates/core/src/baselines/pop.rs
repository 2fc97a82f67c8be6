use crate::error::{Error, Result};
use crate::model::{top_k, Scorer};

/// Train interaction count per item.
pub fn pop_scores(train: &[(usize, usize)], num_items: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; num_items];
    for &(_, i) in train {
        if i >= num_items {
            return Err(Error::InvalidArgument(format!("item {i} out of range for {num_items} items")));
        }
        counts[i] += 1.0;
    }
    Ok(counts)
}

/// All items by descending score, ties by index.
pub fn pop_ranking(scores: &[f64]) -> Vec<usize> {
    top_k(scores, scores.len(), |_| false)
}

/// Popularity recommender: the same scores for every user.
#[derive(Debug, Clone, PartialEq)]
pub struct Pop {
    num_users: usize,
    scores: Vec<f64>,
}

impl Pop {
    pub fn fit(train: &[(usize, usize)], num_users: usize, num_items: usize) -> Result<Self> {
        Ok(Pop {
            num_users,
            scores: pop_scores(train, num_items)?,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Scorer for Pop {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.scores.len()
    }

    fn score_items(&self, _user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.scores);
    }
}
