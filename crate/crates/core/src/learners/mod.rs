//! Non-tree incremental classifiers.

pub mod bayes;
pub mod knn;
pub mod linear;
pub mod naive;
pub mod standardize;

pub use bayes::GaussianNb;
pub use knn::{KnnConfig, KnnWindow};
pub use linear::{LinearKind, LinearModel};
pub use naive::{NaiveMemory, PersistenceSource};
pub use standardize::OnlineStandardizer;
