//! Feature Matrix File, version 1.
//!
//! ```text
//! {"format":"nft-feat","version":1,"feature":"img","dim":2,"count":3}
//! 1<TAB>0.5 -1.25
//! 2<TAB>...
//! ```

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FMF_FORMAT: &str = "nft-feat";
pub const IMAGE_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Img,
    Txt,
    Price,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Img => "img",
            FeatureKind::Txt => "txt",
            FeatureKind::Price => "price",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    feature: FeatureKind,
    dim: usize,
    count: usize,
}

/// Per-item feature rows keyed by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    dim: usize,
    token_ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Rows are `(token_id, values)`; ids must be unique and every row `dim`
    /// wide. Image rows are 64-dimensional and raw price rows scalar.
    pub fn new(kind: FeatureKind, dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        check_dim(kind, dim)?;
        FeatureMatrix::build(kind, dim, rows)
    }

    /// [`FeatureMatrix::new`] without the per-kind width rule; replicated
    /// price rows are wider than 1.
    pub(crate) fn build(kind: FeatureKind, dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Features("feature dim must be positive".into()));
        }
        let mut token_ids = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (id, row) in rows {
            if row.len() != dim {
                return Err(Error::Features(format!(
                    "{kind} row `{id}` has {} values, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Features(format!("{kind} row `{id}` has a non-finite value")));
            }
            if index.insert(id.clone(), token_ids.len()).is_some() {
                return Err(Error::Features(format!("duplicate token_id `{id}` in {kind} features")));
            }
            token_ids.push(id);
            values.extend(row);
        }
        Ok(FeatureMatrix {
            kind,
            dim,
            token_ids,
            index,
            values,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn token_ids(&self) -> &[String] {
        &self.token_ids
    }

    pub fn row(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&k| &self.values[k * self.dim..(k + 1) * self.dim])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Serializes with rows sorted by token id (numerically when every id is
    /// an unsigned integer, else lexicographically) and 17 significant digits
    /// per value.
    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header = Header {
            format: FMF_FORMAT.into(),
            version: 1,
            feature: self.kind,
            dim: self.dim,
            count: self.len(),
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        sort_token_order(&self.token_ids, &mut order);
        for k in order {
            write!(w, "{}\t", self.token_ids[k])?;
            let row = &self.values[k * self.dim..(k + 1) * self.dim];
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{:.16e}", v)?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn check_dim(kind: FeatureKind, dim: usize) -> Result<()> {
    match kind {
        FeatureKind::Img if dim != IMAGE_DIM => Err(Error::Features(format!(
            "image features must be {IMAGE_DIM}-dimensional, got {dim}"
        ))),
        FeatureKind::Price if dim != 1 => Err(Error::Features(format!(
            "raw price features must be 1-dimensional, got {dim}"
        ))),
        _ if dim == 0 => Err(Error::Features("feature dim must be positive".into())),
        _ => Ok(()),
    }
}

fn sort_token_order(ids: &[String], order: &mut [usize]) {
    let numeric: Option<Vec<u128>> = ids.iter().map(|s| s.parse::<u128>().ok()).collect();
    match numeric {
        Some(nums) => order.sort_by(|&a, &b| nums[a].cmp(&nums[b]).then_with(|| ids[a].cmp(&ids[b]))),
        None => order.sort_by(|&a, &b| ids[a].cmp(&ids[b])),
    }
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_file(BufReader::new(file), path)
}

pub fn read_feature_file<R: BufRead>(reader: R, origin: &Path) -> Result<FeatureMatrix> {
    let mut lines = reader.lines();
    let perr = |line: u64, msg: String| Error::parse(origin, line, msg);

    let header_line = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(origin, e))?,
        None => return Err(perr(1, "empty file, header missing".into())),
    };
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| perr(1, format!("invalid header: {e}")))?;
    if header.format != FMF_FORMAT || header.version != 1 {
        return Err(perr(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    check_dim(header.feature, header.dim).map_err(|e| perr(1, e.to_string()))?;

    let mut rows = Vec::with_capacity(header.count);
    let mut seen = std::collections::HashSet::with_capacity(header.count);
    for (k, line) in lines.enumerate() {
        let lno = k as u64 + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| perr(lno, "expected `token_id<TAB>values`".into()))?;
        if id.is_empty() {
            return Err(perr(lno, "empty token_id".into()));
        }
        let values = body
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(perr(lno, format!("non-finite value `{s}`"))),
                Err(_) => Err(perr(lno, format!("unparseable value `{s}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != header.dim {
            return Err(perr(
                lno,
                format!("row `{id}` has {} values, header says dim {}", values.len(), header.dim),
            ));
        }
        if !seen.insert(id.to_string()) {
            return Err(perr(lno, format!("duplicate token_id `{id}`")));
        }
        rows.push((id.to_string(), values));
    }
    if rows.len() != header.count {
        return Err(perr(
            rows.len() as u64 + 2,
            format!("header says count {}, body has {} rows", header.count, rows.len()),
        ));
    }
    FeatureMatrix::new(header.feature, header.dim, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<FeatureMatrix> {
        read_feature_file(s.as_bytes(), Path::new("f.fmf"))
    }

    #[test]
    fn loads_valid_file() {
        let f = parse(
            "{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"txt\",\"dim\":2,\"count\":3}\n\
             1\t0.5 1\n2\t-2 3e-3\n10\t0 0\n",
        )
        .unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.kind(), FeatureKind::Txt);
        assert_eq!(f.row("2").unwrap(), &[-2.0, 0.003]);
    }

    #[test]
    fn short_row_reports_its_line() {
        let mut s = String::from("{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"img\",\"dim\":64,\"count\":2}\n");
        s += &format!("1\t{}\n", vec!["0.1"; 64].join(" "));
        s += &format!("2\t{}\n", vec!["0.1"; 63].join(" "));
        let msg = parse(&s).unwrap_err().to_string();
        assert!(msg.contains(":3:") && msg.contains("63"), "{msg}");
    }

    #[test]
    fn rejects_count_mismatch_duplicates_and_nan() {
        let h = "{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"txt\",\"dim\":1,\"count\":2}\n";
        assert!(parse(&format!("{h}1\t0.5\n")).unwrap_err().to_string().contains("count"));
        assert!(parse(&format!("{h}1\t0.5\n1\t0.5\n")).unwrap_err().to_string().contains("duplicate"));
        assert!(parse(&format!("{h}1\tNaN\n2\t1\n")).unwrap_err().to_string().contains(":2:"));
        assert!(parse(&format!("{h}1\tinf\n2\t1\n")).is_err());
        // price must be scalar, image must be 64-wide
        let p = "{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"price\",\"dim\":2,\"count\":0}\n";
        assert!(parse(p).is_err());
        let extra = "{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"txt\",\"dim\":1,\"count\":0,\"x\":1}\n";
        assert!(parse(extra).is_err());
    }

    #[test]
    fn writes_rows_in_token_order() {
        let m = FeatureMatrix::new(
            FeatureKind::Price,
            1,
            vec![("10".into(), vec![1.0]), ("9".into(), vec![2.0]), ("100".into(), vec![0.0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let ids: Vec<_> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(ids, ["9", "10", "100"]);
        assert!(text.starts_with("{\"format\":\"nft-feat\",\"version\":1,\"feature\":\"price\",\"dim\":1,\"count\":3}\n"));

        let m = FeatureMatrix::new(
            FeatureKind::Txt,
            1,
            vec![("b".into(), vec![1.0]), ("10".into(), vec![2.0]), ("a".into(), vec![0.0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let ids: Vec<_> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(ids, ["10", "a", "b"]);
    }

    proptest! {
        #[test]
        fn write_load_round_trip_is_bit_exact(
            rows in proptest::collection::btree_map("[a-z0-9]{1,6}", proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 0..20)
        ) {
            let m = FeatureMatrix::new(FeatureKind::Txt, 3, rows.into_iter().collect()).unwrap();
            let mut buf = Vec::new();
            m.write(&mut buf).unwrap();
            let back = read_feature_file(buf.as_slice(), Path::new("mem")).unwrap();
            prop_assert_eq!(back.len(), m.len());
            for id in m.token_ids() {
                let a = m.row(id).unwrap();
                let b = back.row(id).unwrap();
                prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
