use crate::error::{Error, Result};

fn check(gt: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if gt.is_empty() {
        return Err(Error::InvalidArgument("empty ground-truth set".into()));
    }
    let mut set = gt.to_vec();
    set.sort_unstable();
    set.dedup();
    Ok(set)
}

/// `|top-K ∩ GT| / |GT|`. `ranked` must not repeat items.
pub fn recall_at_k(ranked: &[usize], gt: &[usize], k: usize) -> Result<f64> {
    let gt = check(gt, k)?;
    let hits = ranked.iter().take(k).filter(|i| gt.binary_search(i).is_ok()).count();
    Ok(hits as f64 / gt.len() as f64)
}

/// Binary-relevance NDCG with a `log2(rank + 1)` discount; the ideal DCG
/// places `min(K, |GT|)` hits at the top.
pub fn ndcg_at_k(ranked: &[usize], gt: &[usize], k: usize) -> Result<f64> {
    let gt = check(gt, k)?;
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| gt.binary_search(i).is_ok())
        .map(|(r, _)| discount(r))
        .sum();
    let idcg: f64 = (0..k.min(gt.len())).map(discount).sum();
    Ok(dcg / idcg)
}

/// Discount for 0-based rank `r`.
fn discount(r: usize) -> f64 {
    1.0 / ((r + 2) as f64).log2()
}
