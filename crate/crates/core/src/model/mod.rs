//! The embedding-propagation model: input MLP over item features, embedding
//! tables, propagation layers, layer concatenation and inner-product scoring.

mod checkpoint;
mod config;
mod forward;
mod params;
mod scoring;

pub use checkpoint::{hex, Checkpoint, CheckpointManifest, TensorEntry};
pub use config::{ModelConfig, DEFAULT_LEAKY_SLOPE};
pub use forward::{
    final_embeddings, forward, item_embeddings_0, propagate, register_params, ForwardOutput, LayerVars, ParamVars,
};
pub use params::{init_params, Linear, ModelParams, PropagationLayer};
pub use scoring::{recommend_topk, top_k, Embeddings, Scorer};
