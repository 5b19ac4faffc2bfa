//! Agreement and dataset-difficulty analytics for image classifiers.
//!
//! The crate ingests per-image decision logs into dense [`DecisionCube`]s and
//! measures how much classifiers agree beyond chance (error consistency),
//! how strongly a dataset splits into images every model gets right or every
//! model gets wrong, and how that compares to independent-model baselines. It
//! also generates synthetic data with a known difficulty structure and runs a
//! two-alternative forced-choice experiment asking people which image a
//! network finds harder.

pub mod bits;
pub mod consistency;
pub mod ddd;
pub mod decision_log;
pub mod error;
pub mod experiment;
pub mod render;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use bits::BitPlane;
pub use consistency::{error_consistency, KappaMatrix, KappaResult, Rdm};
pub use ddd::{DifficultyHistogram, DifficultyPartition};
pub use decision_log::{DecisionCube, DecisionRecord, ModelAccuracy};
pub use error::{Error, Result};
pub use experiment::{ExperimentManifest, TrialResponse};
pub use sim::DifficultyRegime;
pub use synth::GaussianClassSpec;
