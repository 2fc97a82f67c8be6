//! Reverse-mode differentiation over [`Tensor2`] values.
//!
//! A [`Tape`] is an append-only list of nodes. Every primitive evaluates
//! eagerly, stores its output, and records enough of its inputs to run its
//! vector-Jacobian product later. Because nodes can only reference earlier
//! nodes, the insertion order is already a topological order and
//! [`Tape::backward`] simply walks it in reverse.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{SparseMatrix, Tensor2};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Log(Var),
    LogSigmoid(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    SparseMatMul(Arc<SparseMatrix>, Var),
    Dropout(Var, Option<Tensor2>),
    SumSquares(Var),
    Sum(Var),
    Mean(Var),
    RowSum(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor2,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; zero if `v` does not
    /// influence the loss.
    pub fn get(&self, v: Var) -> Tensor2 {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Tensor2::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor2 {
        match self.grads[v.0].take() {
            Some(g) => g,
            None => {
                let (r, c) = self.shapes[v.0];
                Tensor2::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    /// Registers a trainable leaf.
    pub fn param(&mut self, value: Tensor2) -> Var {
        self.push_unchecked(value, Op::Leaf, true)
    }

    /// Registers a leaf that never receives gradient.
    pub fn constant(&mut self, value: Tensor2) -> Var {
        self.push_unchecked(value, Op::Leaf, false)
    }

    fn push_unchecked(&mut self, value: Tensor2, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &str, value: Tensor2, op: Op) -> Result<Var> {
        value.ensure_finite(name)?;
        let requires_grad = match &op {
            Op::Leaf => false,
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddRow(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                self.rg(*a) || self.rg(*b)
            }
            Op::Scale(a, _)
            | Op::LeakyRelu(a, _)
            | Op::Sigmoid(a)
            | Op::Log(a)
            | Op::LogSigmoid(a)
            | Op::GatherRows(a, _)
            | Op::SparseMatMul(_, a)
            | Op::Dropout(a, _)
            | Op::SumSquares(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::RowSum(a) => self.rg(*a),
            Op::ConcatCols(vs) | Op::ConcatRows(vs) => vs.iter().any(|v| self.rg(*v)),
        };
        Ok(self.push_unchecked(value, op, requires_grad))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push("matmul", out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        self.push("add", out, Op::Add(a, b))
    }

    /// Adds a `1×cols` row vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: x.shape(),
                right: b.shape(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, v) in out.row_mut(r).iter_mut().zip(b.data()) {
                *o += v;
            }
        }
        self.push("add_row", out, Op::AddRow(a, bias))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).sub(self.value(b))?;
        self.push("sub", out, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).hadamard(self.value(b))?;
        self.push("mul", out, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let out = self.value(a).scale(s);
        self.push("scale", out, Op::Scale(a, s))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let out = self.value(a).map(|x| leaky_relu(x, slope));
        self.push("leaky_relu", out, Op::LeakyRelu(a, slope))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push("sigmoid", out, Op::Sigmoid(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::ln);
        self.push("log", out, Op::Log(a))
    }

    /// `ln σ(x)`, evaluated without forming σ(x) so large negative inputs stay
    /// finite.
    pub fn log_sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(log_sigmoid);
        self.push("log_sigmoid", out, Op::LogSigmoid(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor2> = parts.iter().map(|v| self.value(*v)).collect();
        let out = Tensor2::concat_cols(&vals)?;
        self.push("concat_cols", out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor2> = parts.iter().map(|v| self.value(*v)).collect();
        let out = Tensor2::concat_rows(&vals)?;
        self.push("concat_rows", out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let out = self.value(a).gather_rows(idx)?;
        self.push("gather_rows", out, Op::GatherRows(a, idx.to_vec()))
    }

    /// Constant sparse matrix times `b`.
    pub fn sparse_matmul(&mut self, m: &Arc<SparseMatrix>, b: Var) -> Result<Var> {
        let out = m.matmul_dense(self.value(b))?;
        self.push("sparse_matmul", out, Op::SparseMatMul(Arc::clone(m), b))
    }

    /// Inverted dropout: each entry is zeroed with probability `ratio` and
    /// survivors are scaled by `1 / (1 - ratio)`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, ratio: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::InvalidArgument(format!(
                "dropout ratio {} outside [0, 1)",
                ratio
            )));
        }
        let (r, c) = self.value(a).shape();
        if ratio == 0.0 {
            let out = self.value(a).clone();
            return self.push("dropout", out, Op::Dropout(a, None));
        }
        let keep = 1.0 - ratio;
        let mask: Vec<f64> = (0..r * c)
            .map(|_| if rng.gen::<f64>() < ratio { 0.0 } else { 1.0 / keep })
            .collect();
        let mask = Tensor2::from_vec_unchecked(r, c, mask);
        let out = self.value(a).hadamard(&mask)?;
        self.push("dropout", out, Op::Dropout(a, Some(mask)))
    }

    pub fn sum_squares(&mut self, a: Var) -> Result<Var> {
        let out = Tensor2::scalar(self.value(a).sum_squares())?;
        self.push("sum_squares", out, Op::SumSquares(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor2::scalar(self.value(a).sum())?;
        self.push("sum", out, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.is_empty() {
            return Err(Error::InvalidArgument("mean of empty tensor".into()));
        }
        let out = Tensor2::scalar(v.sum() / v.len() as f64)?;
        self.push("mean", out, Op::Mean(a))
    }

    /// Per-row sums as an `rows×1` column.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let data = (0..v.rows()).map(|r| v.row(r).iter().sum()).collect();
        let out = Tensor2::from_vec_unchecked(v.rows(), 1, data);
        self.push("row_sum", out, Op::RowSum(a))
    }

    /// Backpropagates from the scalar node `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(Error::Tape("backward on an empty tape".into()));
        }
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::Tape(format!(
                "loss must be a 1x1 scalar, got {}x{}",
                shape.0, shape.1
            )));
        }
        let mut grads: Vec<Option<Tensor2>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor2::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let g = match &node.op {
                Op::Leaf => continue,
                _ => match grads[idx].take() {
                    Some(g) => g,
                    None => continue,
                },
            };
            self.propagate(node, &g, &mut grads)?;
        }

        // Only leaves keep meaningful gradients.
        for (g, node) in grads.iter_mut().zip(&self.nodes) {
            if !matches!(node.op, Op::Leaf) {
                *g = None;
            }
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor2>], v: Var, contribution: Tensor2) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&contribution),
            slot @ None => *slot = Some(contribution),
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor2, grads: &mut [Option<Tensor2>]) -> Result<()> {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    let ga = g.matmul_t(self.value(*b))?;
                    self.accumulate(grads, *a, ga);
                }
                if self.rg(*b) {
                    let gb = self.value(*a).t_matmul(g)?;
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::AddRow(a, bias) => {
                self.accumulate(grads, *a, g.clone());
                if self.rg(*bias) {
                    self.accumulate(grads, *bias, g.col_sums());
                }
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                if self.rg(*b) {
                    self.accumulate(grads, *b, g.scale(-1.0));
                }
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    self.accumulate(grads, *a, g.hadamard(self.value(*b))?);
                }
                if self.rg(*b) {
                    self.accumulate(grads, *b, g.hadamard(self.value(*a))?);
                }
            }
            Op::Scale(a, s) => self.accumulate(grads, *a, g.scale(*s)),
            Op::LeakyRelu(a, slope) => {
                let s = *slope;
                let ga = g.zip_map(self.value(*a), "leaky_relu_grad", |g, x| {
                    if x > 0.0 {
                        g
                    } else {
                        g * s
                    }
                })?;
                self.accumulate(grads, *a, ga);
            }
            Op::Sigmoid(a) => {
                let ga = g.zip_map(&node.value, "sigmoid_grad", |g, s| g * s * (1.0 - s))?;
                self.accumulate(grads, *a, ga);
            }
            Op::Log(a) => {
                let ga = g.zip_map(self.value(*a), "log_grad", |g, x| g / x)?;
                self.accumulate(grads, *a, ga);
            }
            Op::LogSigmoid(a) => {
                let ga = g.zip_map(self.value(*a), "log_sigmoid_grad", |g, x| g * sigmoid(-x))?;
                self.accumulate(grads, *a, ga);
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    if self.rg(*p) {
                        self.accumulate(grads, *p, g.slice_cols(start, start + w));
                    }
                    start += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let h = self.value(*p).rows();
                    if self.rg(*p) {
                        self.accumulate(grads, *p, g.slice_rows(start, start + h));
                    }
                    start += h;
                }
            }
            Op::GatherRows(a, idx) => {
                let (r, c) = self.value(*a).shape();
                let mut ga = Tensor2::zeros(r, c);
                for (k, &i) in idx.iter().enumerate() {
                    for (o, v) in ga.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += v;
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::SparseMatMul(m, b) => {
                self.accumulate(grads, *b, m.t_matmul_dense(g)?);
            }
            Op::Dropout(a, mask) => match mask {
                Some(mask) => self.accumulate(grads, *a, g.hadamard(mask)?),
                None => self.accumulate(grads, *a, g.clone()),
            },
            Op::SumSquares(a) => {
                let s = 2.0 * g.data()[0];
                self.accumulate(grads, *a, self.value(*a).scale(s));
            }
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                self.accumulate(grads, *a, Tensor2::filled(r, c, g.data()[0]));
            }
            Op::Mean(a) => {
                let v = self.value(*a);
                let (r, c) = v.shape();
                self.accumulate(grads, *a, Tensor2::filled(r, c, g.data()[0] / v.len() as f64));
            }
            Op::RowSum(a) => {
                let (r, c) = self.value(*a).shape();
                let mut ga = Tensor2::zeros(r, c);
                for i in 0..r {
                    let gi = g.data()[i];
                    ga.row_mut(i).iter_mut().for_each(|o| *o = gi);
                }
                self.accumulate(grads, *a, ga);
            }
        }
        Ok(())
    }
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_sigmoid(x: f64) -> f64 {
    // ln σ(x) = -softplus(-x)
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}
