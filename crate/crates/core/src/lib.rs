//! Fairness-aware boosting with cumulative parity costs.
//!
//! The crate trains AdaBoost-style stump ensembles whose per-round instance
//! re-weighting carries fairness-related costs for the group currently
//! discriminated by the partial ensemble, and whose final model is the
//! prefix of weak learners minimizing a blended balanced-error / error /
//! fairness objective on a validation set.
//!
//! Everything here is deterministic: splits, synthetic data, and training
//! produce bit-identical results for identical inputs and seeds. The crate
//! is `no_std`-compatible (`alloc` required); file IO, CSV ingestion, and
//! the experiment CLI live in the companion `adafair-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod stump;

pub use dataset::{Dataset, Group, Label, SplitSpec, SyntheticSpec};
pub use engine::{
    DeltaBasis, EnsembleState, FairnessDeltas, FairnessNotion, Mode, TrainConfig,
    WeightDistribution,
};
pub use error::{Error, Result, Subset};
pub use metrics::{GroupConfusion, MetricReport};
pub use stump::Stump;
