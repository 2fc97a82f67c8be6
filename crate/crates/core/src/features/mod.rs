//! Item side-features: FMF v1 files, price replication and assembly of the
//! concatenated feature matrix.

mod bundle;
mod fmf;

pub use bundle::{
    assemble_bundle, replicate_price, BundleOptions, FeatureBundle, FeatureSources, MissingPolicy, ModalityRange,
    Variant, DEFAULT_PRICE_DIM,
};
pub use fmf::{load_feature_file, read_feature_file, FeatureKind, FeatureMatrix, FMF_FORMAT, IMAGE_DIM};
