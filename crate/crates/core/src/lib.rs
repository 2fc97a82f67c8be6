//! Graph collaborative filtering for sparse implicit-feedback marketplaces.
//!
//! The pipeline runs transactions → [`dataset::Dataset`] → normalized
//! bipartite adjacency, item side-features → [`features::FeatureBundle`],
//! then trains an embedding-propagation model with a pairwise ranking loss
//! and ranks items per user for top-K evaluation.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod numeric;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
