//! Verification of the training-error bound on live runs and the per-round
//! audit trail behind it.
//!
//! The bound checked here: the training error of the full weak-learner
//! sequence is at most `(1/gamma) * prod_j Z_j`, where `gamma` is the
//! minimum over instances of the product of their per-round multiplicative
//! costs. It is checked at every prefix, not just the final round, so a
//! violation localizes the offending round.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::engine::EnsembleState;
use crate::error::{Error, Result};

/// Per-round record written by the trainer.
///
/// The delta fields hold the signed fairness deltas the round scored for
/// cost assignment: partial-ensemble deltas in cumulative modes (recorded
/// but cost-inert under the plain-boosting mode), current-learner deltas in
/// the non-cumulative mode. The validation fields hold the objective
/// components of the prefix ending at this round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub weighted_error: f64,
    pub alpha: f64,
    pub z: f64,
    pub delta_sp: f64,
    pub delta_fnr: f64,
    pub delta_fpr: f64,
    /// Instances that received a positive fairness cost this round.
    pub boosted_instances: usize,
    /// Minimum over instances of the cumulative cost product up to this
    /// round; the bound's gamma for this prefix.
    pub min_cost_product: f64,
    pub validation_balanced_error_rate: f64,
    pub validation_error_rate: f64,
    pub validation_fairness: f64,
    pub validation_objective: f64,
}

/// Stable column order shared by every trace export.
pub const TRACE_COLUMNS: [&str; 13] = [
    "round",
    "weighted_error",
    "alpha",
    "z",
    "delta_sp",
    "delta_fnr",
    "delta_fpr",
    "boosted_instances",
    "min_cost_product",
    "validation_balanced_error_rate",
    "validation_error_rate",
    "validation_fairness",
    "validation_objective",
];

/// One row per boosting round, in round order, with a fixed column layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceTable {
    rows: Vec<RoundTrace>,
}

impl TraceTable {
    pub fn rows(&self) -> &[RoundTrace] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn csv_header() -> String {
        TRACE_COLUMNS.join(",")
    }

    pub fn csv_row(&self, index: usize) -> String {
        let r = &self.rows[index];
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.weighted_error,
            r.alpha,
            r.z,
            r.delta_sp,
            r.delta_fnr,
            r.delta_fpr,
            r.boosted_instances,
            r.min_cost_product,
            r.validation_balanced_error_rate,
            r.validation_error_rate,
            r.validation_fairness,
            r.validation_objective
        )
    }
}

/// Snapshot of the round traces; errors on an empty ensemble.
pub fn trace_export(ensemble: &EnsembleState) -> Result<TraceTable> {
    if ensemble.learner_count() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(TraceTable {
        rows: ensemble.round_traces().to_vec(),
    })
}

/// Which per-round delta series a statistic is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaSeries {
    StatisticalParity,
    FalseNegativeRate,
    FalsePositiveRate,
}

/// Sample standard deviation of a per-round delta series. Zero for series
/// shorter than two rounds.
pub fn fluctuation_stat(table: &TraceTable, series: DeltaSeries) -> f64 {
    let values: Vec<f64> = table
        .rows
        .iter()
        .map(|r| match series {
            DeltaSeries::StatisticalParity => r.delta_sp,
            DeltaSeries::FalseNegativeRate => r.delta_fnr,
            DeltaSeries::FalsePositiveRate => r.delta_fpr,
        })
        .collect();
    sample_std_dev(&values)
}

// Welford's recurrence; exact zero on constant series.
fn sample_std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (count, &v) in (1..).zip(values) {
        let delta = v - mean;
        mean += delta / count as f64;
        m2 += delta * (v - mean);
    }
    libm::sqrt(m2 / (n - 1) as f64)
}

/// Result of checking the training-error bound on the full learner
/// sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub training_error: f64,
    pub z_product: f64,
    /// Attained minimum over instances of the cumulative cost product.
    pub gamma: f64,
    /// `z_product / gamma`.
    pub bound: f64,
}

/// Verifies `training_error <= z_product / gamma` at every prefix of the
/// full learner sequence over `train`, and returns the final-round numbers.
/// A violation is a hard error carrying the offending round's values; it
/// indicates an implementation bug, not a data property.
///
/// `train` must be the dataset the ensemble was trained on: the per-round
/// cost products and normalization constants baked into the traces have no
/// meaning against other rows.
pub fn bound_report(ensemble: &EnsembleState, train: &Dataset) -> Result<BoundReport> {
    if ensemble.learner_count() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if !ensemble.margin_sum().is_empty() && ensemble.margin_sum().len() != train.row_count() {
        return Err(Error::LengthMismatch {
            left: ensemble.margin_sum().len(),
            right: train.row_count(),
        });
    }
    let n = train.row_count();
    let labels = train.labels();
    let mut margins = alloc::vec![0.0_f64; n];
    let mut z_product = 1.0;
    let mut report = None;

    for (idx, (stump, alpha)) in ensemble
        .learners()
        .iter()
        .zip(ensemble.alphas())
        .enumerate()
    {
        let column = train.column(stump.feature_index)?;
        for (margin, &value) in margins.iter_mut().zip(column) {
            *margin += alpha * stump.classify(value).sign();
        }
        z_product *= ensemble.z_values()[idx];
        let gamma = ensemble.round_traces()[idx].min_cost_product;
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(Error::Internal(format!(
                "non-positive cost product {gamma} at round {}",
                idx + 1
            )));
        }
        let wrong = margins
            .iter()
            .zip(labels)
            .filter(|(m, y)| Label::from_margin(**m) != **y)
            .count();
        let training_error = wrong as f64 / n as f64;
        let bound = z_product / gamma;
        if training_error > bound {
            return Err(Error::BoundViolation {
                round: idx + 1,
                training_error,
                bound,
                z_product,
                gamma,
            });
        }
        report = Some(BoundReport {
            training_error,
            z_product,
            gamma,
            bound,
        });
    }
    report.ok_or(Error::EmptyEnsemble)
}
