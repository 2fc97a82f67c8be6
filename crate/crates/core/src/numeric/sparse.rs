use crate::error::{Error, Result};
use crate::numeric::Tensor2;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from coordinate triplets. Duplicate coordinates are an error;
    /// column indices within a row end up sorted.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, v) in &sorted {
            if r >= rows || c >= cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({}, {}) outside {}x{} matrix",
                    r, c, rows, cols
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("sparse entry ({}, {})", r, c)));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = sorted.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidArgument(format!(
                "duplicate sparse entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut indptr = vec![0usize; rows + 1];
        for &(r, _, _) in &sorted {
            indptr[r + 1] += 1;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices: sorted.iter().map(|t| t.1).collect(),
            values: sorted.iter().map(|t| t.2).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            out.set(r, c, v);
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, &t).expect("transpose of valid matrix")
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Sparse × dense product.
    pub fn matmul_dense(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.rows() {
            return Err(Error::Shape {
                op: "sparse_matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let m = rhs.cols();
        let mut out = Tensor2::zeros(self.rows, m);
        for r in 0..self.rows {
            let out_row = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (o, &b) in out_row.iter_mut().zip(rhs.row(c)) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ × rhs`, used by the backward pass of [`Self::matmul_dense`].
    pub fn t_matmul_dense(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.rows != rhs.rows() {
            return Err(Error::Shape {
                op: "sparse_t_matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let m = rhs.cols();
        let mut out = Tensor2::zeros(self.cols, m);
        for r in 0..self.rows {
            let g = rhs.row(r);
            for (c, v) in self.row(r) {
                for (o, &b) in out.row_mut(c).iter_mut().zip(g) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }
}
