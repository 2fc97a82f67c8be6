use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::numeric::Tensor2;

pub const DEFAULT_PRICE_DIM: usize = 64;

/// Which side features feed the item embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    None,
    Img,
    Txt,
    Price,
    All,
}

impl Variant {
    pub const ALL_VARIANTS: [Variant; 5] = [Variant::None, Variant::Img, Variant::Txt, Variant::Price, Variant::All];

    /// Modalities in assembly order.
    pub fn modalities(self) -> &'static [FeatureKind] {
        match self {
            Variant::None => &[],
            Variant::Img => &[FeatureKind::Img],
            Variant::Txt => &[FeatureKind::Txt],
            Variant::Price => &[FeatureKind::Price],
            Variant::All => &[FeatureKind::Img, FeatureKind::Txt, FeatureKind::Price],
        }
    }

    pub fn uses_features(self) -> bool {
        self != Variant::None
    }

    /// Display name used in reports (`NGCF`, `NGCF-img`, ...).
    pub fn model_name(self) -> &'static str {
        match self {
            Variant::None => "NGCF",
            Variant::Img => "NGCF-img",
            Variant::Txt => "NGCF-txt",
            Variant::Price => "NGCF-price",
            Variant::All => "NGCF-all",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Img => "img",
            Variant::Txt => "txt",
            Variant::Price => "price",
            Variant::All => "all",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL_VARIANTS
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Any dataset item without a row in a required modality is an error.
    #[default]
    Error,
    /// Missing rows become zeros.
    ZeroFill,
}

#[derive(Debug, Clone, Copy)]
pub struct BundleOptions {
    pub missing: MissingPolicy,
    pub price_dim: usize,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions {
            missing: MissingPolicy::Error,
            price_dim: DEFAULT_PRICE_DIM,
        }
    }
}

/// The loaded per-modality matrices available for assembly.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureSources<'a> {
    pub img: Option<&'a FeatureMatrix>,
    pub txt: Option<&'a FeatureMatrix>,
    pub price: Option<&'a FeatureMatrix>,
}

impl<'a> FeatureSources<'a> {
    fn get(&self, kind: FeatureKind) -> Option<&'a FeatureMatrix> {
        match kind {
            FeatureKind::Img => self.img,
            FeatureKind::Txt => self.txt,
            FeatureKind::Price => self.price,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityRange {
    pub kind: FeatureKind,
    pub start: usize,
    pub end: usize,
}

impl ModalityRange {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Item side-feature matrix aligned to a dataset's item order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    variant: Variant,
    matrix: Option<Tensor2>,
    ranges: Vec<ModalityRange>,
    zero_filled: Vec<(FeatureKind, usize)>,
}

impl FeatureBundle {
    pub fn empty() -> Self {
        FeatureBundle {
            variant: Variant::None,
            matrix: None,
            ranges: Vec::new(),
            zero_filled: Vec::new(),
        }
    }

    /// Bundle from an already assembled matrix; `ranges` must partition its
    /// columns.
    pub fn from_matrix(variant: Variant, matrix: Tensor2, ranges: Vec<ModalityRange>) -> Result<Self> {
        if variant == Variant::None {
            return Err(Error::Features("variant `none` carries no feature matrix".into()));
        }
        let mut next = 0;
        for r in &ranges {
            if r.start != next || r.end < r.start {
                return Err(Error::Features("modality ranges must partition the columns".into()));
            }
            next = r.end;
        }
        if next != matrix.cols() {
            return Err(Error::Features(format!(
                "modality ranges cover {next} columns, matrix has {}",
                matrix.cols()
            )));
        }
        Ok(FeatureBundle {
            variant,
            matrix: Some(matrix),
            ranges,
            zero_filled: Vec::new(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn matrix(&self) -> Option<&Tensor2> {
        self.matrix.as_ref()
    }

    pub fn width(&self) -> usize {
        self.matrix.as_ref().map_or(0, Tensor2::cols)
    }

    pub fn ranges(&self) -> &[ModalityRange] {
        &self.ranges
    }

    pub fn range_of(&self, kind: FeatureKind) -> Option<Range<usize>> {
        self.ranges.iter().find(|r| r.kind == kind).map(ModalityRange::range)
    }

    /// Number of items zero-filled per modality (only under
    /// [`MissingPolicy::ZeroFill`]).
    pub fn zero_filled(&self) -> &[(FeatureKind, usize)] {
        &self.zero_filled
    }

    /// Standardizes every column to zero mean and unit variance, with the
    /// statistics computed over `items` only. Constant columns are centred.
    pub fn standardize(&mut self, items: &[usize]) -> Result<()> {
        let Some(x) = self.matrix.as_mut() else {
            return Ok(());
        };
        if items.is_empty() {
            return Err(Error::Features("standardization needs at least one item".into()));
        }
        let (rows, cols) = x.shape();
        if let Some(&bad) = items.iter().find(|&&i| i >= rows) {
            return Err(Error::Features(format!("item {bad} out of range for {rows} rows")));
        }
        let n = items.len() as f64;
        let mut mean = vec![0.0; cols];
        for &i in items {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for &i in items {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        for r in 0..rows {
            for ((v, m), s) in x.row_mut(r).iter_mut().zip(&mean).zip(&scale) {
                *v = (*v - m) * s;
            }
        }
        Ok(())
    }
}

/// Repeats each scalar price `dim` times.
pub fn replicate_price(raw: &FeatureMatrix, dim: usize) -> Result<FeatureMatrix> {
    if raw.kind() != FeatureKind::Price || raw.dim() != 1 {
        return Err(Error::Features(format!(
            "price replication expects a 1-dim price matrix, got {} dim {}",
            raw.kind(),
            raw.dim()
        )));
    }
    if dim == 0 {
        return Err(Error::Features("replicated price dim must be positive".into()));
    }
    let rows = raw
        .token_ids()
        .iter()
        .map(|t| (t.clone(), vec![raw.row(t).expect("own id")[0]; dim]))
        .collect();
    FeatureMatrix::build(FeatureKind::Price, dim, rows)
}

/// Assembles `X*` for `variant`, rows in `ds` item order, modalities in
/// image ∥ text ∥ price order. Raw price is replicated to
/// `opts.price_dim` columns.
pub fn assemble_bundle(
    ds: &Dataset,
    variant: Variant,
    sources: FeatureSources<'_>,
    opts: BundleOptions,
) -> Result<FeatureBundle> {
    if variant == Variant::None {
        return Ok(FeatureBundle::empty());
    }
    let mut blocks: Vec<(FeatureKind, FeatureMatrix)> = Vec::new();
    for &kind in variant.modalities() {
        let m = sources.get(kind).ok_or_else(|| {
            Error::Features(format!("variant `{variant}` requires {kind} features but none were provided"))
        })?;
        if m.kind() != kind {
            return Err(Error::Features(format!("expected {kind} features, got a {} file", m.kind())));
        }
        let m = if kind == FeatureKind::Price && m.dim() == 1 {
            replicate_price(m, opts.price_dim)?
        } else {
            m.clone()
        };
        blocks.push((kind, m));
    }

    let mut zero_filled = Vec::new();
    for (kind, m) in &blocks {
        let missing: Vec<&str> = ds
            .items()
            .iter()
            .filter(|t| m.row(t).is_none())
            .map(String::as_str)
            .collect();
        if missing.is_empty() {
            continue;
        }
        match opts.missing {
            MissingPolicy::Error => {
                let shown: Vec<&str> = missing.iter().copied().take(10).collect();
                return Err(Error::Features(format!(
                    "{} dataset items lack {kind} features: {}{}",
                    missing.len(),
                    shown.join(", "),
                    if missing.len() > 10 { ", ..." } else { "" }
                )));
            }
            MissingPolicy::ZeroFill => {
                log::warn!("zero-filling {} items missing {kind} features", missing.len());
                zero_filled.push((*kind, missing.len()));
            }
        }
    }

    let width: usize = blocks.iter().map(|(_, m)| m.dim()).sum();
    let mut data = Vec::with_capacity(ds.num_items() * width);
    for token in ds.items() {
        for (_, m) in &blocks {
            match m.row(token) {
                Some(r) => data.extend_from_slice(r),
                None => data.extend(std::iter::repeat_n(0.0, m.dim())),
            }
        }
    }
    let mut ranges = Vec::with_capacity(blocks.len());
    let mut start = 0;
    for (kind, m) in &blocks {
        ranges.push(ModalityRange {
            kind: *kind,
            start,
            end: start + m.dim(),
        });
        start += m.dim();
    }
    Ok(FeatureBundle {
        variant,
        matrix: Some(Tensor2::new(ds.num_items(), width, data)?),
        ranges,
        zero_filled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(items: &[&str]) -> Dataset {
        let pairs: Vec<(String, String)> = items.iter().map(|t| ("w".to_string(), t.to_string())).collect();
        Dataset::from_purchases(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())), 1).unwrap()
    }

    fn matrix(kind: FeatureKind, dim: usize, items: &[&str], f: impl Fn(usize, usize) -> f64) -> FeatureMatrix {
        FeatureMatrix::new(
            kind,
            dim,
            items
                .iter()
                .enumerate()
                .map(|(k, t)| (t.to_string(), (0..dim).map(|j| f(k, j)).collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn price_replication() {
        let p = matrix(FeatureKind::Price, 1, &["a", "b"], |k, _| if k == 0 { 1.5 } else { 0.0 });
        let r = replicate_price(&p, 64).unwrap();
        assert_eq!(r.dim(), 64);
        assert_eq!(r.kind(), FeatureKind::Price);
        assert!(r.row("a").unwrap().iter().all(|&v| v == 1.5));
        assert!(r.row("b").unwrap().iter().all(|&v| v == 0.0));
        let txt = matrix(FeatureKind::Txt, 1, &["a"], |_, _| 1.0);
        assert!(replicate_price(&txt, 64).is_err());
    }

    #[test]
    fn all_variant_width_and_ranges() {
        let items = ["1", "2", "3"];
        let d = ds(&items);
        let img = matrix(FeatureKind::Img, 64, &items, |k, j| (k * 100 + j) as f64);
        let txt = matrix(FeatureKind::Txt, 1800, &items, |k, j| (k + j) as f64 * 0.5);
        let price = matrix(FeatureKind::Price, 1, &items, |k, _| k as f64 + 0.25);
        let src = FeatureSources {
            img: Some(&img),
            txt: Some(&txt),
            price: Some(&price),
        };
        let b = assemble_bundle(&d, Variant::All, src, BundleOptions::default()).unwrap();
        assert_eq!(b.width(), 1928);
        let x = b.matrix().unwrap();
        assert_eq!(x.rows(), 3);

        let r = b.range_of(FeatureKind::Img).unwrap();
        assert_eq!(r, 0..64);
        for (k, t) in items.iter().enumerate() {
            let row = d.item_index(t).unwrap();
            assert_eq!(&x.row(row)[r.clone()], img.row(t).unwrap());
            assert_eq!(&x.row(row)[b.range_of(FeatureKind::Txt).unwrap()], txt.row(t).unwrap());
            let pr = b.range_of(FeatureKind::Price).unwrap();
            assert_eq!(pr, 1864..1928);
            assert!(x.row(row)[pr].iter().all(|&v| v == k as f64 + 0.25));
        }
    }

    #[test]
    fn single_modality_variants() {
        let items = ["a", "b"];
        let d = ds(&items);
        let price = matrix(FeatureKind::Price, 1, &items, |k, _| 2.0 * k as f64);
        let src = FeatureSources {
            price: Some(&price),
            ..Default::default()
        };
        let b = assemble_bundle(&d, Variant::Price, src, BundleOptions::default()).unwrap();
        assert_eq!(b.width(), 64);
        let rep = replicate_price(&price, 64).unwrap();
        for t in items {
            assert_eq!(b.matrix().unwrap().row(d.item_index(t).unwrap()), rep.row(t).unwrap());
        }
        let none = assemble_bundle(&d, Variant::None, src, BundleOptions::default()).unwrap();
        assert!(none.matrix().is_none());
        assert_eq!(none.width(), 0);

        let err = assemble_bundle(&d, Variant::Img, src, BundleOptions::default()).unwrap_err();
        assert!(err.to_string().contains("img"));
    }

    #[test]
    fn missing_items_error_or_zero_fill() {
        let items: Vec<String> = (0..15).map(|k| format!("t{k}")).collect();
        let refs: Vec<&str> = items.iter().map(String::as_str).collect();
        let d = ds(&refs);
        let txt = matrix(FeatureKind::Txt, 2, &refs[..3], |_, _| 1.0);
        let src = FeatureSources {
            txt: Some(&txt),
            ..Default::default()
        };
        let msg = assemble_bundle(&d, Variant::Txt, src, BundleOptions::default())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("12 dataset items") && msg.contains("t3") && msg.contains("..."), "{msg}");
        assert!(!msg.contains("t13"), "lists at most 10 ids: {msg}");

        let opts = BundleOptions {
            missing: MissingPolicy::ZeroFill,
            ..Default::default()
        };
        let b = assemble_bundle(&d, Variant::Txt, src, opts).unwrap();
        assert_eq!(b.zero_filled(), &[(FeatureKind::Txt, 12)]);
        let x = b.matrix().unwrap();
        for (k, t) in refs.iter().enumerate() {
            let row = x.row(d.item_index(t).unwrap());
            if k < 3 {
                assert_eq!(row, &[1.0, 1.0]);
            } else {
                assert_eq!(row, &[0.0, 0.0]);
            }
        }
    }

    #[test]
    fn assembly_is_permutation_equivariant() {
        let items = ["a", "b", "c", "d"];
        let d = ds(&items);
        let txt = matrix(FeatureKind::Txt, 3, &items, |k, j| (k * 3 + j) as f64);
        let src = FeatureSources {
            txt: Some(&txt),
            ..Default::default()
        };
        let base = assemble_bundle(&d, Variant::Txt, src, BundleOptions::default()).unwrap();
        let perm = [2, 0, 3, 1];
        let dp = d.with_item_permutation(&perm).unwrap();
        let permuted = assemble_bundle(&dp, Variant::Txt, src, BundleOptions::default()).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(base.matrix().unwrap().row(i), permuted.matrix().unwrap().row(p));
        }
    }

    #[test]
    fn standardize_uses_given_items() {
        let items = ["a", "b", "c"];
        let d = ds(&items);
        let txt = matrix(FeatureKind::Txt, 2, &items, |k, j| if j == 0 { k as f64 } else { 5.0 });
        let src = FeatureSources {
            txt: Some(&txt),
            ..Default::default()
        };
        let mut b = assemble_bundle(&d, Variant::Txt, src, BundleOptions::default()).unwrap();
        b.standardize(&[0, 1]).unwrap();
        let x = b.matrix().unwrap();
        // column 0 over rows {0,1}: mean 0.5, sd 0.5
        assert_eq!(x.get(0, 0), -1.0);
        assert_eq!(x.get(1, 0), 1.0);
        assert_eq!(x.get(2, 0), 3.0);
        // constant column is centred
        assert!((0..3).all(|r| x.get(r, 1) == 0.0));
    }

    #[test]
    fn variant_parsing() {
        for v in Variant::ALL_VARIANTS {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("image".parse::<Variant>().is_err());
        assert_eq!(Variant::All.model_name(), "NGCF-all");
    }
}
