//! Cost-sensitive decision-tree induction.
//!
//! The enhanced greedy criterion scores a test by balance plus coverage
//! efficiency plus λ times impurity reduction, all per unit test cost.
//! Classical baselines, weakest-link pruning, preprocessing, metrics and
//! exhaustive oracles for tiny instances live alongside it.

pub mod coverage;
pub mod dataset;
pub mod error;
pub mod impurity;
pub mod inducer;
pub mod instance;
pub mod metrics;
pub mod oracle;
pub mod pruner;
pub mod train;
pub mod tree;

pub use dataset::{prepare, CostMode, PrepConfig, PreparedDataset, RawTable};
pub use error::{Error, Result};
pub use impurity::{impurity_reduction, ClassHistogram, ImpurityKind};
pub use inducer::{induce, Algorithm, GreedyConfig};
pub use instance::{Instance, InstanceParts};
pub use metrics::{evaluate, Evaluation, RunReport};
pub use train::{run, train, Tag, TrainOptions};
pub use tree::TreeModel;
