use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor2({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl Tensor2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "tensor data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "tensor {}x{} at flat index {}",
                rows, cols, pos
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Tensor2::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Tensor2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor2::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Tensor2::new(1, 1, vec![value])
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Tensor2 { rows, cols, data }
    }

    /// Xavier/Glorot uniform init: entries drawn from U(-b, b) with
    /// b = sqrt(6 / (rows + cols)).
    pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let bound = xavier_bound(rows, cols);
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Tensor2 { rows, cols, data }
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite(format!(
                "{} ({}x{}, flat index {})",
                what, self.rows, self.cols, pos
            ))),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.rows {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            let lhs_row = &self.data[i * k..(i + 1) * k];
            for (p, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor2::from_vec_unchecked(n, m, out))
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.rows != rhs.rows {
            return Err(Error::Shape {
                op: "t_matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (k, n, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; n * m];
        for p in 0..k {
            let lhs_row = &self.data[p * n..(p + 1) * n];
            let rhs_row = &rhs.data[p * m..(p + 1) * m];
            for (i, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * m..(i + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor2::from_vec_unchecked(n, m, out))
    }

    /// `self · rhsᵀ` without materializing the transpose.
    pub fn matmul_t(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.cols {
            return Err(Error::Shape {
                op: "matmul_t",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.rows);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let a = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let b = &rhs.data[j * k..(j + 1) * k];
                out[i * m + j] = dot(a, b);
            }
        }
        Ok(Tensor2::from_vec_unchecked(n, m, out))
    }

    pub fn zip_map(&self, rhs: &Tensor2, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor2> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor2::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        Tensor2::from_vec_unchecked(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, rhs: &Tensor2) -> Result<Tensor2> {
        self.zip_map(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Tensor2) -> Result<Tensor2> {
        self.zip_map(rhs, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &Tensor2) -> Result<Tensor2> {
        self.zip_map(rhs, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        self.map(|v| v * s)
    }

    pub(crate) fn add_assign(&mut self, rhs: &Tensor2) {
        debug_assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Column sums as a 1×cols tensor.
    pub fn col_sums(&self) -> Tensor2 {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        Tensor2::from_vec_unchecked(1, self.cols, out)
    }

    /// Column block `[start, end)` as a new tensor.
    pub fn slice_cols(&self, start: usize, end: usize) -> Tensor2 {
        assert!(start <= end && end <= self.cols);
        let w = end - start;
        let mut data = Vec::with_capacity(self.rows * w);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Tensor2::from_vec_unchecked(self.rows, w, data)
    }

    /// Row block `[start, end)` as a new tensor.
    pub fn slice_rows(&self, start: usize, end: usize) -> Tensor2 {
        assert!(start <= end && end <= self.rows);
        Tensor2::from_vec_unchecked(
            end - start,
            self.cols,
            self.data[start * self.cols..end * self.cols].to_vec(),
        )
    }

    pub fn gather_rows(&self, idx: &[usize]) -> Result<Tensor2> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {} out of range for {} rows",
                    i, self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Tensor2::from_vec_unchecked(idx.len(), self.cols, data))
    }

    pub fn concat_cols(parts: &[&Tensor2]) -> Result<Tensor2> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat_cols of zero tensors".into()))?;
        let rows = first.rows;
        for p in parts {
            if p.rows != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Ok(Tensor2::from_vec_unchecked(rows, cols, data))
    }

    pub fn concat_rows(parts: &[&Tensor2]) -> Result<Tensor2> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat_rows of zero tensors".into()))?;
        let cols = first.cols;
        for p in parts {
            if p.cols != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
        }
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect::<Vec<_>>();
        Ok(Tensor2::from_vec_unchecked(data.len() / cols.max(1), cols, data))
    }

    /// Largest absolute entrywise difference; shapes must match.
    pub fn max_abs_diff(&self, rhs: &Tensor2) -> f64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Tensor2::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Tensor2::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Tensor2::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn matmul_shapes_and_values() {
        let a = Tensor2::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Tensor2::from_rows(&[vec![5.0], vec![6.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), (2, 1));
        assert_eq!(c.data(), &[17.0, 39.0]);
        let err = b.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("(2, 1)"), "{err}");
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = Tensor2::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.0]]).unwrap();
        let b = Tensor2::from_rows(&[vec![2.0, 1.0], vec![0.0, -3.0]]).unwrap();
        assert_eq!(a.t_matmul(&b).unwrap(), a.transpose().matmul(&b).unwrap());
        let c = Tensor2::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(a.matmul_t(&c).unwrap(), a.matmul(&c.transpose()).unwrap());
    }

    #[test]
    fn concat_and_slice_round_trip() {
        let a = Tensor2::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let b = Tensor2::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let c = Tensor2::concat_cols(&[&a, &b]).unwrap();
        assert_eq!(c.slice_cols(0, 1), a);
        assert_eq!(c.slice_cols(1, 3), b);
        let r = Tensor2::concat_rows(&[&b, &b]).unwrap();
        assert_eq!(r.shape(), (4, 2));
        assert_eq!(r.slice_rows(2, 4), b);
    }
}
