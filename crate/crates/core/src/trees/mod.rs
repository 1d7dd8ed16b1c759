//! Hoeffding-bound incremental decision trees.

pub mod hoeffding;
pub mod stats;

pub use hoeffding::{
    gain_range, hoeffding_bound, HoeffdingConfig, HoeffdingTree, LeafPrediction, TreeCounters,
    TreeVariant,
};
