//! Concept learnability for word embeddings.
//!
//! A concept is a list of words. It is learnable in an embedding when a
//! linear classifier trained on a random half of the list (plus as many
//! random non-members) recognises the other half. This crate loads
//! embeddings and word lists, runs the repeated split/train/test protocol,
//! builds random-list null distributions with empirical p-values, and
//! compares embeddings with an exact Wilcoxon signed-rank test.

pub mod concepts;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod metrics;
pub mod perceptron;
pub mod report;
pub mod rng;
pub mod splitter;
pub mod stats;

pub use concepts::{load_concept, random_concept, resolve, Concept, ResolvedConcept};
pub use embedding::{EmbeddingSource, EmbeddingStore, Precision, VectorFormat};
pub use error::{Error, Result};
pub use experiment::{empirical_p_value, run_concept, run_null, AggregateResult, ExperimentConfig, NullDistribution, PValue};
pub use metrics::{confusion_metrics, roc_auc, Metric, MetricsRecord};
pub use perceptron::{sigmoid, train, PerceptronModel, TrainConfig};
pub use splitter::{make_split, EvaluationSplit};
pub use stats::{wilcoxon_signed_rank, Alternative, WilcoxonOutcome};
