//! Twin and look-alike similarity analysis over face embeddings.
//!
//! Stages: [`datamodel`] loads identities and embeddings, [`pairing`] builds
//! training pairs, [`head`] trains a shared-weight projection with
//! contrastive loss, [`scoring`] turns embeddings into comparison and
//! similarity scores, [`engine`] runs all-to-all matching, and [`analysis`]
//! computes thresholds, tables, ROC metrics, baselines and agreement
//! statistics. [`synth`] generates seeded test worlds.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod analysis;
pub mod datamodel;
pub mod engine;
pub mod error;
pub mod head;
pub mod pairing;
pub mod scalar;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Head = head::HeadParams<f64>;
pub type HeadF32 = head::HeadParams<f32>;
pub type Layer = head::Layer<f64>;
pub type Roc = analysis::RocCurve<f64>;
pub type Metrics = analysis::VerificationMetrics<f64>;
pub type Baseline = analysis::SimilarityBaseline<f64>;
pub type Correlation = analysis::CorrelationReport<f64>;
pub type BlandAltman = analysis::BlandAltmanReport<f64>;
pub type Sweep = analysis::SweepRow<f64>;
pub type TrainingData = head::TrainData<f64>;

#[cfg(test)]
pub(crate) mod testutil;
