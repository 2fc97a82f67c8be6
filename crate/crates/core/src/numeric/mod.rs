//! Dense/sparse matrices, a reverse-mode tape and Adam.

mod adam;
pub mod gradcheck;
mod sparse;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use sparse::SparseMatrix;
pub use tape::{leaky_relu, log_sigmoid, sigmoid, Gradients, Tape, Var};
pub use tensor::{dot, xavier_bound, Tensor2};
