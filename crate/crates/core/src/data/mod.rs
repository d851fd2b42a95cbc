//! Dataset generation, ingestion and splitting.

mod io;
mod split;
mod synthetic;

pub use io::{
    load_dense, load_sparse, load_sparse_with, sorted_vocabulary, write_dense, write_sparse, Column, DenseFormat,
    SparseOptions,
};
pub use split::{holdout_indices, holdout_split, stratified_indices, stratified_sample, Split};
pub use synthetic::{
    generate, generate_imbalanced, generate_synthetic, sample_from_concept, unit_vector, ImbalancedConfig,
    SyntheticConfig,
};
