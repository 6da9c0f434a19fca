//! Dependency parsers that learn from fully and partially annotated treebanks.
//!
//! Three parser families share one feature space:
//!
//! * a log-linear second-order graph parser trained by maximizing the
//!   likelihood of the forest of trees consistent with each partial tree,
//! * a linear second-order graph parser trained with a perceptron whose
//!   reference is the best tree under the partial-tree constraints,
//! * a linear arc-eager transition parser trained the same way with beam
//!   search and early update.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! experiment orchestration live in the `pardep` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod features;
pub mod graph;
pub mod model;
pub mod sim;
pub mod train;
pub mod transition;

mod math;
#[cfg(test)]
mod testutil;

pub use corpus::{
    candidate_heads, evaluate_uas, DepTree, EvalResult, PartialTree, PunctSet, Sentence, Token,
};
pub use error::Error;
pub use features::{FeatureConfig, FeatureExtractor, FeatureVector};
pub use model::WeightModel;
pub use train::{ParserKind, TrainConfig, TrainingInstance};
