//! Early prediction of online meme cascades.
//!
//! The pipeline: load or generate a source graph, decompose it into k-shells
//! and modularity communities, turn each meme's early post trajectory into
//! network, volume and language features, discover early-sensor sources, and
//! classify eventual success with cross-validated learners.
//!
//! Numeric code is generic over the scalar type; the aliases below fix it to
//! `f64` for everyday use.

// Parameter checks write `!(lo < x)` on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod graph;
pub mod learn;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod sensors;
pub mod sim;
pub mod textfeat;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub type Partition = graph::CommunityPartition<f64>;
pub type Features = features::FeatureVector<f64>;
pub type Lexicon = textfeat::Lexicon<f64>;
pub type LexiconSet = textfeat::LexiconSet<f64>;
pub type Dataset = learn::Dataset<f64>;
pub type TrainedModel = learn::TrainedModel<f64>;
pub type SensorReport = sensors::SensorReport<f64>;
