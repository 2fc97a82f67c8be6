use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const REJECTION_TRIES: usize = 32;

/// Uniform draw from items user `u` never interacted with anywhere in `ds`
/// (train, valid or test).
pub fn sample_negative<R: Rng + ?Sized>(ds: &Dataset, u: usize, rng: &mut R) -> Result<usize> {
    let m = ds.num_items();
    let positives = ds.user_items(u);
    if positives.len() >= m {
        return Err(Error::Dataset(format!(
            "user {} interacted with every item; no negative exists",
            ds.user_id(u)
        )));
    }
    for _ in 0..REJECTION_TRIES {
        let j = rng.gen_range(0..m);
        if positives.binary_search(&j).is_err() {
            return Ok(j);
        }
    }
    // Dense user: index into the complement directly.
    let k = rng.gen_range(0..m - positives.len());
    Ok(nth_missing(positives, k))
}

/// The `k`-th (0-based) value in `0..` absent from sorted `present`.
fn nth_missing(present: &[usize], k: usize) -> usize {
    let mut candidate = k;
    for &p in present {
        if p <= candidate {
            candidate += 1;
        } else {
            break;
        }
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn dataset(user0_items: &[usize], m: usize) -> Dataset {
        let mut pairs: Vec<(String, String)> = user0_items.iter().map(|i| ("a".into(), format!("t{i}"))).collect();
        pairs.extend((0..m).map(|i| ("b".into(), format!("t{i}"))));
        let ds = Dataset::from_purchases(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())), 1).unwrap();
        assert_eq!(ds.num_items(), m);
        ds
    }

    #[test]
    fn only_remaining_item_is_returned() {
        let ds = dataset(&[0, 1, 2, 3, 5, 6], 7);
        let u = ds.user_index("a").unwrap();
        let t4 = ds.item_index("t4").unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            assert_eq!(sample_negative(&ds, u, &mut rng).unwrap(), t4);
        }
    }

    #[test]
    fn never_returns_a_positive() {
        let ds = dataset(&[1, 3, 5, 7, 9], 12);
        let u = ds.user_index("a").unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..10_000 {
            let j = sample_negative(&ds, u, &mut rng).unwrap();
            assert!(!ds.has_interaction(u, j));
        }
    }

    #[test]
    fn user_with_everything_is_error() {
        let ds = dataset(&[0, 1, 2], 3);
        let u = ds.user_index("b").unwrap();
        assert!(sample_negative(&ds, u, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn uniform_over_eligible_items() {
        // 10 eligible of 20; expected frequency 0.1 each.
        let ds = dataset(&(0..10).collect::<Vec<_>>(), 20);
        let u = ds.user_index("a").unwrap();
        let mut counts = vec![0usize; ds.num_items()];
        let mut rng = rng_from_seed(21);
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_negative(&ds, u, &mut rng).unwrap()] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            if ds.has_interaction(u, j) {
                assert_eq!(c, 0);
            } else {
                let f = c as f64 / draws as f64;
                assert!((f - 0.1).abs() <= 0.005, "item {j}: {f}");
            }
        }
    }

    #[test]
    fn complement_indexing() {
        assert_eq!(nth_missing(&[0, 1, 3], 0), 2);
        assert_eq!(nth_missing(&[0, 1, 3], 1), 4);
        assert_eq!(nth_missing(&[], 3), 3);
        assert_eq!(nth_missing(&[5], 4), 4);
    }
}
