//! Transaction ingestion, implicit-feedback datasets, splits, the normalized
//! bipartite adjacency and negative sampling.

mod adjacency;
mod interactions;
mod sampling;
mod split;
mod transactions;

pub use adjacency::{build_adjacency, node_dropout, NormalizedAdjacency};
pub use interactions::{build_dataset, stats_table, Dataset, DEFAULT_MIN_ITEM_INTERACTIONS};
pub use sampling::sample_negative;
pub use split::{split_dataset, Part, Split, SplitRatios};
pub use transactions::{
    ingest_transactions, read_transactions, write_transactions, Transaction, TransactionLog, TRANSACTIONS_HEADER,
};
