use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<(usize, usize)>,
    pub valid: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn part(&self, p: Part) -> &[(usize, usize)] {
        match p {
            Part::Train => &self.train,
            Part::Valid => &self.valid,
            Part::Test => &self.test,
        }
    }

    /// Per-user sorted item lists for one part.
    pub fn user_lists(&self, p: Part, num_users: usize) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); num_users];
        for &(u, i) in self.part(p) {
            lists[u].push(i);
        }
        lists.iter_mut().for_each(|l| l.sort_unstable());
        lists
    }

    /// Split with every interaction in train; used by fixtures that fit the
    /// full data.
    pub fn all_train(ds: &Dataset) -> Split {
        Split {
            train: ds.interactions().to_vec(),
            valid: Vec::new(),
            test: Vec::new(),
            seed: 0,
        }
    }
}

/// Global uniform shuffle, then `floor(train·E)` / `floor(valid·E)` /
/// remainder.
pub fn split_dataset(ds: &Dataset, ratios: SplitRatios, seed: u64) -> Result<Split> {
    let SplitRatios { train, valid, test } = ratios;
    if [train, valid, test].iter().any(|r| !(0.0..=1.0).contains(r))
        || (train + valid + test - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "split ratios {train}/{valid}/{test} must be in [0,1] and sum to 1"
        )));
    }
    let e = ds.num_interactions();
    if e < 3 {
        return Err(Error::Dataset(format!("cannot split {e} interactions; need at least 3")));
    }
    let mut all = ds.interactions().to_vec();
    all.shuffle(&mut rng_from_seed(seed));

    let n_train = (train * e as f64 + 1e-9).floor() as usize;
    let n_valid = ((valid * e as f64 + 1e-9).floor() as usize).min(e - n_train);
    let test_part = all.split_off(n_train + n_valid);
    let valid_part = all.split_off(n_train);
    Ok(Split {
        train: all,
        valid: valid_part,
        test: test_part,
        seed,
    })
}
