//! Independent oracles for the test suites.
//!
//! Everything here recomputes results from first principles — exhaustive
//! candidate enumeration, per-row tallies, the textbook AdaBoost update —
//! and deliberately avoids the optimized implementation paths it is used to
//! check. Only the shared data types are reused.

use adafair_core::dataset::{Dataset, Group, Label};

/// The 6-instance metrics fixture, rows as (group, truth, prediction):
/// (s,+,+), (s,+,-), (s,-,-), (s̄,+,+), (s̄,-,+), (s̄,-,-).
pub fn fixture_rows() -> (Vec<Label>, Vec<Label>, Vec<Group>) {
    use Group::{NonProtected as N, Protected as P};
    use Label::{Negative as Neg, Positive as Pos};
    let truth = vec![Pos, Pos, Neg, Pos, Neg, Neg];
    let predictions = vec![Pos, Neg, Neg, Pos, Pos, Neg];
    let groups = vec![P, P, P, N, N, N];
    (truth, predictions, groups)
}

/// Raw per-subset tally computed row by row, with no shared code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BruteTally {
    pub tp_protected: usize,
    pub fn_protected: usize,
    pub tn_protected: usize,
    pub fp_protected: usize,
    pub tp_non_protected: usize,
    pub fn_non_protected: usize,
    pub tn_non_protected: usize,
    pub fp_non_protected: usize,
}

pub fn brute_tally(truth: &[Label], predictions: &[Label], groups: &[Group]) -> BruteTally {
    let mut t = BruteTally::default();
    for i in 0..truth.len() {
        let protected = matches!(groups[i], Group::Protected);
        let actual_positive = matches!(truth[i], Label::Positive);
        let predicted_positive = matches!(predictions[i], Label::Positive);
        match (protected, actual_positive, predicted_positive) {
            (true, true, true) => t.tp_protected += 1,
            (true, true, false) => t.fn_protected += 1,
            (true, false, false) => t.tn_protected += 1,
            (true, false, true) => t.fp_protected += 1,
            (false, true, true) => t.tp_non_protected += 1,
            (false, true, false) => t.fn_non_protected += 1,
            (false, false, false) => t.tn_non_protected += 1,
            (false, false, true) => t.fp_non_protected += 1,
        }
    }
    t
}

/// A stump candidate found by exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteStump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub weighted_error: f64,
}

impl BruteStump {
    pub fn classify(&self, value: f64) -> Label {
        let sign = if value <= self.threshold {
            self.polarity
        } else {
            -self.polarity
        };
        if sign > 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Error distance treated as a tie, mirroring the production search so
/// both sides of an equality check break float-noise ties identically.
pub const ERROR_TOLERANCE: f64 = 1e-12;

/// Exhaustive minimum-weighted-error stump search. Every candidate's error
/// is recomputed by direct per-row summation; ties break by (error, feature,
/// threshold, polarity +1 first), matching the documented convention.
pub fn brute_force_stump(d: &Dataset, weights: &[f64]) -> BruteStump {
    let labels = d.labels();
    let mut best: Option<BruteStump> = None;

    let mut consider = |feature: usize, threshold: f64, polarity: i8, column: &[f64]| {
        let mut error = 0.0;
        for (i, &value) in column.iter().enumerate() {
            let sign = if value <= threshold {
                polarity
            } else {
                -polarity
            };
            let predicted = if sign > 0 {
                Label::Positive
            } else {
                Label::Negative
            };
            if predicted != labels[i] {
                error += weights[i];
            }
        }
        let candidate = BruteStump {
            feature,
            threshold,
            polarity,
            weighted_error: error,
        };
        let replace = match &best {
            None => true,
            Some(current) => {
                if (candidate.weighted_error - current.weighted_error).abs() > ERROR_TOLERANCE {
                    candidate.weighted_error < current.weighted_error
                } else if candidate.feature != current.feature {
                    candidate.feature < current.feature
                } else if candidate.threshold != current.threshold {
                    candidate.threshold < current.threshold
                } else {
                    candidate.polarity > current.polarity
                }
            }
        };
        if replace {
            best = Some(candidate);
        }
    };

    for feature in 0..d.column_count() {
        let column = d.column(feature).unwrap();
        let mut values: Vec<f64> = column.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();

        let mut thresholds = vec![f64::NEG_INFINITY];
        for pair in values.windows(2) {
            let mut mid = 0.5 * (pair[0] + pair[1]);
            if mid >= pair[1] {
                mid = pair[0];
            }
            thresholds.push(mid);
        }
        thresholds.push(f64::INFINITY);

        for threshold in thresholds {
            for polarity in [1i8, -1i8] {
                consider(feature, threshold, polarity, column);
            }
        }
    }
    best.expect("at least one candidate")
}

/// One reference AdaBoost round: stump, learner weight, weighted error, and
/// the normalization constant of the weight update that produced the *next*
/// distribution.
#[derive(Clone, Debug)]
pub struct OracleRound {
    pub stump: BruteStump,
    pub alpha: f64,
    pub weighted_error: f64,
    pub z: f64,
    /// Distribution used to fit this round's stump.
    pub weights: Vec<f64>,
}

/// Textbook AdaBoost with brute-force stumps and the half-log-ratio learner
/// weight. Stops early when a round is perfect or no longer better than
/// chance. Returns one record per executed round.
pub fn reference_adaboost(d: &Dataset, rounds: usize) -> Vec<OracleRound> {
    let n = d.row_count();
    let labels = d.labels();
    let mut weights = vec![1.0 / n as f64; n];
    let mut out = Vec::new();

    for _ in 0..rounds {
        let stump = brute_force_stump(d, &weights);
        let error = stump.weighted_error;
        if error >= 0.5 {
            break;
        }
        let (alpha, last_round) = if error == 0.0 {
            (0.5 * ((1.0 - 1e-10) / 1e-10_f64).ln(), true)
        } else {
            (0.5 * ((1.0 - error) / error).ln(), false)
        };

        let column = d.column(stump.feature).unwrap();
        let mut next: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            let agreement = if stump.classify(column[i]) == labels[i] {
                1.0
            } else {
                -1.0
            };
            next.push(weights[i] * (-alpha * agreement).exp());
        }
        let z: f64 = next.iter().sum();
        for w in &mut next {
            *w /= z;
        }

        out.push(OracleRound {
            stump,
            alpha,
            weighted_error: error,
            z,
            weights: weights.clone(),
        });
        weights = next;
        if last_round {
            break;
        }
    }
    out
}

/// Deterministic dyadic weight vector: `k_i / 2^shift` with the residue
/// folded into the last entry so the sum is exactly one. All downstream
/// error sums are then exact in f64, which makes tie-breaking comparisons
/// between independent implementations meaningful.
pub fn dyadic_weights(raw: &[u32], shift: u32) -> Vec<f64> {
    assert!(!raw.is_empty());
    let denom = 1u64 << shift;
    let mut numerators: Vec<u64> = raw.iter().map(|&r| u64::from(r % 16) + 1).collect();
    let total: u64 = numerators.iter().sum();
    // Rescale to sum exactly to 2^shift.
    let mut acc = 0u64;
    for numerator in numerators.iter_mut() {
        *numerator = (*numerator * denom) / total;
        acc += *numerator;
    }
    let last = numerators.len() - 1;
    numerators[last] += denom - acc;
    numerators
        .iter()
        .map(|&k| k as f64 / denom as f64)
        .collect()
}
