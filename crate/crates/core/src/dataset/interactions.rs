use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::TransactionLog;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_ITEM_INTERACTIONS: usize = 3;

/// Filtered, index-mapped implicit-feedback interactions.
///
/// Users are `0..num_users()`, items `0..num_items()`, both numbered in the
/// order they first appear among surviving purchases.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    interactions: Vec<(usize, usize)>,
    purchase_counts: Vec<u32>,
    user_items: Vec<Vec<usize>>,
    item_users: Vec<Vec<usize>>,
    min_item_interactions: usize,
}

impl Dataset {
    /// Builds from raw `(buyer, token)` purchases in log order.
    ///
    /// Repeat purchases collapse to one interaction. Items with fewer than
    /// `min_item_interactions` distinct buyers are dropped in a single pass,
    /// then users without any remaining interaction disappear.
    pub fn from_purchases<'a>(
        purchases: impl IntoIterator<Item = (&'a str, &'a str)>,
        min_item_interactions: usize,
    ) -> Result<Self> {
        let mut pair_pos: HashMap<(&str, &str), usize> = HashMap::new();
        let mut pairs: Vec<((&str, &str), u32)> = Vec::new();
        let mut any = false;
        for p in purchases {
            any = true;
            match pair_pos.get(&p) {
                Some(&k) => pairs[k].1 += 1,
                None => {
                    pair_pos.insert(p, pairs.len());
                    pairs.push((p, 1));
                }
            }
        }
        if !any {
            return Err(Error::Dataset("transaction log is empty".into()));
        }

        let mut buyers_per_item: HashMap<&str, usize> = HashMap::new();
        for ((_, token), _) in &pairs {
            *buyers_per_item.entry(token).or_default() += 1;
        }

        let mut b = Builder::default();
        for ((buyer, token), count) in pairs {
            if buyers_per_item[token] >= min_item_interactions {
                b.push(buyer, token, count);
            }
        }
        if b.interactions.is_empty() {
            return Err(Error::Dataset(format!(
                "no interactions left after keeping items with at least {min_item_interactions} buyers"
            )));
        }
        Ok(b.finish(min_item_interactions))
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn min_item_interactions(&self) -> usize {
        self.min_item_interactions
    }

    pub fn interactions(&self) -> &[(usize, usize)] {
        &self.interactions
    }

    pub fn purchase_counts(&self) -> &[u32] {
        &self.purchase_counts
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn user_id(&self, u: usize) -> &str {
        &self.users[u]
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn user_index(&self, wallet: &str) -> Option<usize> {
        self.user_index.get(wallet).copied()
    }

    pub fn item_index(&self, token: &str) -> Option<usize> {
        self.item_index.get(token).copied()
    }

    /// Items of user `u`, ascending.
    pub fn user_items(&self, u: usize) -> &[usize] {
        &self.user_items[u]
    }

    /// Users of item `i`, ascending.
    pub fn item_users(&self, i: usize) -> &[usize] {
        &self.item_users[i]
    }

    pub fn has_interaction(&self, u: usize, i: usize) -> bool {
        self.user_items[u].binary_search(&i).is_ok()
    }

    /// `(wallet, token)` pairs in interaction order; feeding them back into
    /// [`Dataset::from_purchases`] reproduces this dataset.
    pub fn id_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.interactions
            .iter()
            .map(|&(u, i)| (self.users[u].as_str(), self.items[i].as_str()))
    }

    /// Dataset over a row-permuted item order: item `i` moves to `perm[i]`.
    pub fn with_item_permutation(&self, perm: &[usize]) -> Result<Dataset> {
        let m = self.num_items();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation of the item indices".into()));
        }
        let mut items = vec![String::new(); m];
        for (i, &p) in perm.iter().enumerate() {
            items[p] = self.items[i].clone();
        }
        let mut b = Builder {
            items: items.clone(),
            item_index: items.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect(),
            ..Builder::default()
        };
        for (k, &(u, i)) in self.interactions.iter().enumerate() {
            b.push(&self.users[u], &self.items[i], self.purchase_counts[k]);
        }
        Ok(b.finish(self.min_item_interactions))
    }

    /// Plain-text table with Users / Items / Interactions columns.
    pub fn stats_table(&self, name: &str) -> String {
        stats_table(&[(name, self)])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = DatasetFile {
            format: DATASET_FORMAT.into(),
            version: 1,
            min_item_interactions: self.min_item_interactions,
            users: self.users.clone(),
            items: self.items.clone(),
            interactions: self
                .interactions
                .iter()
                .zip(&self.purchase_counts)
                .map(|(&(u, i), &c)| (u, i, c))
                .collect(),
        };
        let json = serde_json::to_string(&file)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: DatasetFile = serde_json::from_str(&text)?;
        if file.format != DATASET_FORMAT || file.version != 1 {
            return Err(Error::Dataset(format!(
                "{}: unsupported dataset format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        let (n, m) = (file.users.len(), file.items.len());
        let mut b = Builder {
            user_index: index_of(&file.users)?,
            item_index: index_of(&file.items)?,
            users: file.users,
            items: file.items,
            ..Builder::default()
        };
        let mut seen = std::collections::HashSet::new();
        for &(u, i, c) in &file.interactions {
            if u >= n || i >= m {
                return Err(Error::Dataset(format!("interaction ({u}, {i}) out of range")));
            }
            if !seen.insert((u, i)) {
                return Err(Error::Dataset(format!("duplicate interaction ({u}, {i})")));
            }
            b.interactions.push((u, i));
            b.purchase_counts.push(c);
        }
        let ds = b.finish(file.min_item_interactions);
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if let Some(u) = (0..self.num_users()).find(|&u| self.user_items[u].is_empty()) {
            return Err(Error::Dataset(format!("user {} has no interactions", self.users[u])));
        }
        if let Some(i) = (0..self.num_items()).find(|&i| self.item_users[i].len() < self.min_item_interactions) {
            return Err(Error::Dataset(format!(
                "item {} has {} interactions, below the threshold {}",
                self.items[i],
                self.item_users[i].len(),
                self.min_item_interactions
            )));
        }
        Ok(())
    }
}

pub fn build_dataset(log: &TransactionLog, min_item_interactions: usize) -> Result<Dataset> {
    Dataset::from_purchases(log.purchases(), min_item_interactions)
}

/// Stats for several named datasets, one row each.
pub fn stats_table(rows: &[(&str, &Dataset)]) -> String {
    let header = ["Collection", "Users", "Items", "Interactions"];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|(name, ds)| {
            [
                name.to_string(),
                thousands(ds.num_users()),
                thousands(ds.num_items()),
                thousands(ds.num_interactions()),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &body {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}",
        header[0],
        header[1],
        header[2],
        header[3],
        w0 = widths[0],
        w1 = widths[1],
        w2 = widths[2],
        w3 = widths[3]
    );
    let _ = writeln!(
        out,
        "{}-+-{}-+-{}-+-{}",
        "-".repeat(widths[0]),
        "-".repeat(widths[1]),
        "-".repeat(widths[2]),
        "-".repeat(widths[3])
    );
    for r in &body {
        let _ = writeln!(
            out,
            "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}",
            r[0],
            r[1],
            r[2],
            r[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
    }
    out
}

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (k, ch) in s.chars().enumerate() {
        if k > 0 && (s.len() - k).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

const DATASET_FORMAT: &str = "nft-dataset";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    format: String,
    version: u32,
    min_item_interactions: usize,
    users: Vec<String>,
    items: Vec<String>,
    /// `[user, item, purchase_count]`
    interactions: Vec<(usize, usize, u32)>,
}

fn index_of(ids: &[String]) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), k).is_some() {
            return Err(Error::Dataset(format!("duplicate id `{id}`")));
        }
    }
    Ok(map)
}

#[derive(Default)]
struct Builder {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    interactions: Vec<(usize, usize)>,
    purchase_counts: Vec<u32>,
}

impl Builder {
    fn push(&mut self, buyer: &str, token: &str, count: u32) {
        let u = intern(&mut self.users, &mut self.user_index, buyer);
        let i = intern(&mut self.items, &mut self.item_index, token);
        self.interactions.push((u, i));
        self.purchase_counts.push(count);
    }

    fn finish(self, min_item_interactions: usize) -> Dataset {
        let mut user_items = vec![Vec::new(); self.users.len()];
        let mut item_users = vec![Vec::new(); self.items.len()];
        for &(u, i) in &self.interactions {
            user_items[u].push(i);
            item_users[i].push(u);
        }
        user_items.iter_mut().for_each(|v| v.sort_unstable());
        item_users.iter_mut().for_each(|v| v.sort_unstable());
        Dataset {
            users: self.users,
            items: self.items,
            user_index: self.user_index,
            item_index: self.item_index,
            interactions: self.interactions,
            purchase_counts: self.purchase_counts,
            user_items,
            item_users,
            min_item_interactions,
        }
    }
}

fn intern(ids: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    if let Some(&k) = index.get(key) {
        return k;
    }
    ids.push(key.to_string());
    index.insert(key.to_string(), ids.len() - 1);
    ids.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn owned(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn build(pairs: &[(String, String)], min: usize) -> Result<Dataset> {
        Dataset::from_purchases(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())), min)
    }

    /// 10 users, 5 items. Distinct buyers per item:
    ///   t1: u1..u5 (5)   t2: u1,u6,u7 (3)   t3: u2,u8 (2)
    ///   t4: u9 (1)       t5: u3,u4,u10 (3) plus a repeat u3-t5.
    fn fixture() -> Vec<(String, String)> {
        owned(&[
            ("u1", "t1"),
            ("u2", "t1"),
            ("u3", "t1"),
            ("u4", "t1"),
            ("u5", "t1"),
            ("u1", "t2"),
            ("u6", "t2"),
            ("u7", "t2"),
            ("u2", "t3"),
            ("u8", "t3"),
            ("u9", "t4"),
            ("u3", "t5"),
            ("u4", "t5"),
            ("u10", "t5"),
            ("u3", "t5"),
        ])
    }

    #[test]
    fn fixture_counts_by_hand() {
        // t3 (2 buyers) and t4 (1 buyer) fall below 3; u8 and u9 only bought
        // those, so 8 users remain. Interactions: 5 + 3 + 3 = 11.
        let ds = build(&fixture(), 3).unwrap();
        assert_eq!(
            (ds.num_users(), ds.num_items(), ds.num_interactions()),
            (8, 3, 11)
        );
        assert_eq!(ds.items(), &["t1", "t2", "t5"]);
        assert_eq!(ds.item_index("t3"), None);
        let k = ds
            .interactions()
            .iter()
            .position(|&(u, i)| ds.user_id(u) == "u3" && ds.item_id(i) == "t5")
            .unwrap();
        assert_eq!(ds.purchase_counts()[k], 2);
    }

    #[test]
    fn item_below_threshold_is_dropped() {
        let ds = build(&owned(&[("a", "x"), ("b", "x"), ("a", "y"), ("b", "y"), ("c", "y")]), 3).unwrap();
        assert_eq!(ds.items(), &["y"]);
    }

    #[test]
    fn all_items_above_threshold_keep_everything() {
        let pairs = owned(&[("a", "x"), ("b", "x"), ("c", "x"), ("a", "y"), ("b", "y"), ("c", "y")]);
        let ds = build(&pairs, 3).unwrap();
        assert_eq!(ds.num_interactions(), 6);
    }

    #[test]
    fn empty_after_filtering_is_error() {
        assert!(build(&owned(&[("a", "x")]), 3).is_err());
        assert!(build(&[], 1).is_err());
    }

    #[test]
    fn filtering_is_idempotent() {
        let ds = build(&fixture(), 3).unwrap();
        let again = Dataset::from_purchases(ds.id_pairs(), 3).unwrap();
        assert_eq!(ds.users(), again.users());
        assert_eq!(ds.items(), again.items());
        assert_eq!(ds.interactions(), again.interactions());
    }

    #[test]
    fn index_maps_are_bijections() {
        let ds = build(&fixture(), 1).unwrap();
        for (k, u) in ds.users().iter().enumerate() {
            assert_eq!(ds.user_index(u), Some(k));
        }
        for (k, i) in ds.items().iter().enumerate() {
            assert_eq!(ds.item_index(i), Some(k));
        }
        assert!((0..ds.num_users()).all(|u| !ds.user_items(u).is_empty()));
    }

    #[test]
    fn save_load_round_trip() {
        let ds = build(&fixture(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ds.json");
        ds.save(&p).unwrap();
        assert_eq!(Dataset::load(&p).unwrap(), ds);
    }

    #[test]
    fn item_permutation_moves_rows() {
        let ds = build(&fixture(), 3).unwrap();
        let p = ds.with_item_permutation(&[2, 0, 1]).unwrap();
        assert_eq!(p.items(), &["t2", "t5", "t1"]);
        assert_eq!(p.num_interactions(), ds.num_interactions());
        assert!(ds.with_item_permutation(&[0, 0, 1]).is_err());
    }

    #[test]
    fn stats_table_layout() {
        let ds = build(&fixture(), 3).unwrap();
        let t = ds.stats_table("fixture");
        let lines: Vec<_> = t.lines().collect();
        assert!(lines[0].contains("Users") && lines[0].contains("Items") && lines[0].contains("Interactions"));
        assert!(lines[2].starts_with("fixture"));
        assert!(lines[2].ends_with("11"));
        assert_eq!(thousands(2469), "2,469");
        assert_eq!(thousands(929), "929");
        assert_eq!(thousands(1234567), "1,234,567");
    }
}
