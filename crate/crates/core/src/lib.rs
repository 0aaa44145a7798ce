//! Sensor-type classification for building automation time series.
//!
//! Traces are cut into fixed windows, summarized by the distribution of
//! their per-window medians and variances, and classified by a random forest
//! whose class-probability entropy flags uncertain predictions for review.

pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod manifest;
pub mod meta;
pub mod rng;
mod stats;
pub mod synth;
pub mod trace;
pub mod uncertainty;

pub mod cli;

pub use error::{Error, Result};
pub use features::{FeatureMask, FeatureMatrix, FeatureSchema, FeatureVector, MedVarVectors};
pub use forest::{AveragingMode, ClassProbabilities, ForestConfig, LabeledDataset, RandomForest};
pub use trace::{SensorTrace, SensorType, Window};
pub use uncertainty::{EntropyBase, Prediction};
