//! BPR training: pairwise loss, negative sampling, mini-batching and Adam.

mod config;
mod loss;
mod trainer;

pub use config::TrainConfig;
pub use loss::{batch_loss_value, batch_objective, bpr_loss, gradient_check, bpr_loss_from_scores, BatchLoss, Regularization};
pub use trainer::{train, train_from, EpochRecord, TrainOutcome, TrainReport};
