//! DAG-based hierarchical classification.
//!
//! This crate treats a class hierarchy (a DAG of is-a edges) as a probabilistic
//! model over per-class Bernoulli variables and provides everything needed to
//! train and evaluate classifiers against it:
//!
//! - [`hierarchy`]: build, validate and query the class DAG (transitive
//!   closure, topological order, roots, labeled subset) plus a TSV file format.
//! - [`encoding`]: the hierarchical label encoding (a label and all of its
//!   ancestors) and the loss mask selecting which outputs train for a label.
//! - [`loss`]: the masked squared-error loss and the flat one-hot baseline.
//! - [`inference`]: recursive noisy-OR marginalization of conditional scores
//!   and single-class prediction under MLNP or ANP candidate restriction.
//! - [`model`]: a small reference estimator (linear or one hidden layer) with
//!   manual forward/backward passes and SGD/Adam optimizers.
//! - [`mod@train`]: deterministic minibatch training with per-interval
//!   metrics.
//! - [`data`]: synthetic hierarchical Gaussian datasets, CSV ingestion and
//!   per-feature standardization.
//! - [`mod@bench`]: baseline-vs-hierarchical comparison runs and step-count
//!   speedup reports.

pub mod bench;
pub mod data;
pub mod encoding;
pub mod hierarchy;
pub mod inference;
pub mod loss;
pub mod model;
pub mod train;

pub use bench::{compute_speedup, run_comparison, BenchConfig, RunMetrics, SpeedupReport};
pub use data::{generate_synthetic, Dataset, Standardization, SynthConfig};
pub use encoding::{encode_label, loss_mask, EncodingTable, LabelEncoding, LossMask};
pub use hierarchy::{Hierarchy, HierarchyError, NodeId};
pub use inference::{
    marginals, predict, predict_from_scores, prediction_scores, ConditionalScores, MarginalScores,
    PredictionMode,
};
pub use loss::{hierarchical_loss, onehot_loss, LossValue};
pub use model::{Head, Model, ModelArch, Optimizer, OptimizerKind, SavedModel};
pub use train::{evaluate, train, EvalRecord, EvalStats, TrainConfig, TrainOutcome};

/// Scores that stand in for probabilities are kept strictly inside `(0, 1)`
/// by clamping to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-7;
