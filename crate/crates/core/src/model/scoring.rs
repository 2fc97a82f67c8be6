use crate::error::{Error, Result};
use crate::numeric::{dot, Tensor2};

/// Anything that can score every item for a user.
pub trait Scorer: Sync {
    fn num_users(&self) -> usize;
    fn num_items(&self) -> usize;
    /// Writes one score per item into `out` (`out.len() == num_items()`).
    fn score_items(&self, user: usize, out: &mut [f64]);
}

/// Final node embeddings, user rows first then item rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    num_users: usize,
    matrix: Tensor2,
}

impl Embeddings {
    pub fn new(num_users: usize, matrix: Tensor2) -> Result<Self> {
        if num_users > matrix.rows() {
            return Err(Error::InvalidArgument(format!(
                "{num_users} users but only {} embedding rows",
                matrix.rows()
            )));
        }
        Ok(Embeddings { num_users, matrix })
    }

    pub fn matrix(&self) -> &Tensor2 {
        &self.matrix
    }

    pub fn user(&self, u: usize) -> &[f64] {
        self.matrix.row(u)
    }

    pub fn item(&self, i: usize) -> &[f64] {
        self.matrix.row(self.num_users + i)
    }

    /// `⟨e*_u, e*_i⟩`.
    pub fn score(&self, u: usize, i: usize) -> Result<f64> {
        if u >= self.num_users || i >= self.num_items() {
            return Err(Error::InvalidArgument(format!(
                "score({u}, {i}) out of range for {} users / {} items",
                self.num_users,
                self.num_items()
            )));
        }
        Ok(dot(self.user(u), self.item(i)))
    }

    /// Copy with user row `u` multiplied by `factor`.
    pub fn with_scaled_user(&self, u: usize, factor: f64) -> Embeddings {
        let mut m = self.matrix.clone();
        m.row_mut(u).iter_mut().for_each(|v| *v *= factor);
        Embeddings {
            num_users: self.num_users,
            matrix: m,
        }
    }
}

impl Scorer for Embeddings {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.matrix.rows() - self.num_users
    }

    fn score_items(&self, user: usize, out: &mut [f64]) {
        let u = self.user(user);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(u, self.item(i));
        }
    }
}

/// Top-`k` item indices by descending score, skipping items for which
/// `excluded` is true. Ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize, excluded: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..scores.len()).filter(|&i| !excluded(i)).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < eligible.len() {
        if k == 0 {
            return Vec::new();
        }
        eligible.select_nth_unstable_by(k - 1, cmp);
        eligible.truncate(k);
    }
    eligible.sort_unstable_by(cmp);
    eligible
}

/// Top-`k` recommendations for `user`, excluding the sorted item list
/// `exclude`.
pub fn recommend_topk(scorer: &dyn Scorer, user: usize, k: usize, exclude: &[usize]) -> Vec<(usize, f64)> {
    let mut scores = vec![0.0; scorer.num_items()];
    scorer.score_items(user, &mut scores);
    top_k(&scores, k, |i| exclude.binary_search(&i).is_ok())
        .into_iter()
        .map(|i| (i, scores[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    #[test]
    fn inner_product_scores() {
        let m = Tensor2::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = Embeddings::new(1, m).unwrap();
        assert_eq!(e.score(0, 0).unwrap(), 1.0);
        assert_eq!(e.score(0, 1).unwrap(), 0.0);
        assert!(e.score(1, 0).is_err());
        assert!(e.score(0, 2).is_err());
    }

    #[test]
    fn score_matches_direct_dot() {
        let mut rng = rng_from_seed(6);
        let rows: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let e = Embeddings::new(1, Tensor2::from_rows(&rows).unwrap()).unwrap();
        let direct = rows[0][0] * rows[1][0] + rows[0][1] * rows[1][1] + rows[0][2] * rows[1][2];
        assert!((e.score(0, 0).unwrap() - direct).abs() <= 1e-15);
    }

    #[test]
    fn top_k_edge_cases() {
        let s = [0.3, 0.9, 0.1, 0.9];
        assert_eq!(top_k(&s, 2, |_| false), vec![1, 3]);
        assert_eq!(top_k(&s, 10, |_| false), vec![1, 3, 0, 2]);
        assert_eq!(top_k(&s, 3, |i| i != 2), vec![2]);
        assert!(top_k(&s, 0, |_| false).is_empty());
    }

    #[test]
    fn top_k_matches_full_sort() {
        let mut rng = rng_from_seed(12);
        for _ in 0..200 {
            // coarse scores force ties
            let scores: Vec<f64> = (0..50).map(|_| rng.gen_range(0..20) as f64).collect();
            let excluded: Vec<bool> = (0..50).map(|_| rng.gen_bool(0.2)).collect();
            let k = rng.gen_range(1..60);
            let mut all: Vec<usize> = (0..50).filter(|&i| !excluded[i]).collect();
            all.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            all.truncate(k);
            assert_eq!(top_k(&scores, k, |i| excluded[i]), all);
        }
    }

    #[test]
    fn ranking_invariant_to_positive_user_scaling() {
        let mut rng = rng_from_seed(2);
        let data: Vec<f64> = (0..(4 + 20) * 5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = Embeddings::new(4, Tensor2::new(24, 5, data).unwrap()).unwrap();
        for u in 0..4 {
            let before: Vec<usize> = recommend_topk(&e, u, 10, &[]).into_iter().map(|p| p.0).collect();
            let scaled = e.with_scaled_user(u, 3.7);
            let after: Vec<usize> = recommend_topk(&scaled, u, 10, &[]).into_iter().map(|p| p.0).collect();
            assert_eq!(before, after);
        }
    }
}
