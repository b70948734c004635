//! Interval type-2 fuzzy regression with hybrid Mamdani/TSK rules.
//!
//! Training builds a [`KnowledgeBase`] of data-driven IT2 partitions,
//! seeds a universe of candidate rules from the training rows, fits a
//! clamped polynomial consequent per rule, and lets an ant colony pick the
//! active subset. Prediction is a weighted mean of the fired rules' outputs.

pub mod aco;
pub mod data;
pub mod dominance;
pub mod error;
pub mod eval;
pub mod inference;
pub mod it2;
pub mod kb;
pub mod pipeline;
pub mod poly;
pub mod reference;
pub mod rule;
pub mod universe;

pub use aco::AcoConfig;
pub use data::{Dataset, FoldSplit};
pub use error::{Error, Result};
pub use inference::{InferenceConfig, Model, Prediction};
pub use it2::{It2Set, MembershipInterval, Partition, PartitionConfig, TNorm};
pub use kb::{Clause, KnowledgeBase};
pub use pipeline::{train, PipelineConfig, TrainedModel};
pub use poly::Polynomial;
pub use rule::HybridRule;
pub use universe::{GenerationConfig, RuleUniverse};
