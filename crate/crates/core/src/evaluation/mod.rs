//! Top-K ranking metrics, the full-ranking evaluation protocol and grid
//! search.

mod grid;
mod metrics;
mod protocol;
mod report;

pub use grid::{grid_search, grid_search_with, GridPoint, GridRecord, GridSpec, GRID_SELECT_K};
pub use metrics::{ndcg_at_k, recall_at_k};
pub use protocol::{evaluable_users, evaluate};
pub use report::{comparison_table, MetricReport};
