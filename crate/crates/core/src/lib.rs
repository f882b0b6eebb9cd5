//! Red-blood-cell morphology classification: feature extraction, base
//! learners, voting and stacking ensembles, feature importance and the
//! evaluation metrics used to compare them.

pub mod confusion;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod features;
pub mod imaging;
pub mod importance;
pub mod io;
pub mod learners;
pub mod label;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod schema;
pub mod synth;

pub use confusion::ConfusionMatrix;
pub use dataset::{FeatureTable, LabeledDataset};
pub use error::{Error, Result};
pub use label::ClassLabel;
pub use matrix::Matrix;
pub use schema::{FeatureGroup, FeatureSchema, FeatureVector};
