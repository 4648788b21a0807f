//! Classification of search queries into dynamic event classes with a
//! stacked multilayer perceptron.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`ingest`]: parse query logs and document indexes, or generate labeled
//!   synthetic instances.
//! - [`features`]: turn a [`QueryInstance`] into a 28-value [`FeatureVector`].
//! - [`network`]: the stacked MLP, forward pass, and exact backpropagation.
//! - [`optim`]: seven interchangeable gradient-descent update rules.
//! - [`harness`]: splits, training, metrics, baselines and experiments.

pub mod config;
pub mod datamodel;
pub mod error;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod network;
pub mod optim;

pub use datamodel::{
    validate_instance, ClickRecord, ClusterMember, EventClass, Feature, FeatureStats, FeatureVector, Granularity,
    LabeledDataset, QueryInstance, TimeSeries, FEATURE_COUNT, FEATURE_NAMES,
};
pub use error::{Error, Result};
pub use features::{extract_features, Gazetteer};
pub use harness::{EvalReport, SplitManifest, TrainConfig};
pub use ingest::{generate_synthetic, SyntheticSpec};
pub use network::{Checkpoint, GradientSet, Matrix, SmlpModel};
pub use optim::{Method, OptimizerSpec, OptimizerState};
