//! Ultraconservative multiclass learning from noisy labels.
//!
//! The crate learns linear multiclass classifiers `f_W(x) = argmax_q <w_q, x>`
//! with additive ultraconservative updates, either from trusted labels
//! ([`ultra`]) or from labels corrupted by a known confusion matrix
//! ([`uma`]). Around the two learners sit the noise model used to corrupt
//! data ([`noise`]), a Gaussian kernel-PCA front end ([`kpca`]), synthetic
//! and file-based datasets ([`data`]), evaluation metrics ([`eval`]) and
//! a seeded experiment harness ([`experiment`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod confusion;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod kpca;
pub mod model;
pub mod noise;
pub mod rng;
pub mod ultra;
pub mod uma;

pub use confusion::{invert_confusion, ConfusionMatrix};
pub use error::{Error, Result};
pub use model::{dataset_margin, Dataset, Features, Row, WeightMatrix};
pub use ultra::{train_ultraconservative, TauPolicy, TrainStats};
pub use uma::{train_uma, SelectionStrategy, UmaConfig};
