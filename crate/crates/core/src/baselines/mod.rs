//! Non-graph reference models evaluated through the same protocol as the
//! propagation model.

mod bprmf;
mod itemknn;
mod pop;

pub use bprmf::{bprmf_config, bprmf_train};
pub use itemknn::{itemknn_scores, ItemKnn, ItemSimilarity, DEFAULT_KNN_NEIGHBORS};
pub use pop::{pop_ranking, pop_scores, Pop};
