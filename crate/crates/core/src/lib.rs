//! Drift-adaptive stream classifiers for loop-detector congestion levels.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod elm;
pub mod ensembles;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ingest;
pub mod learners;
pub mod registry;
pub mod report;
pub mod synth;
pub mod trees;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    argmax_class, one_hot, ClassScores, Classifier, CongestionLevel, LabeledInstance, SpeedValue,
};
