//! Weighted decision stumps: depth-1 axis-aligned weak learners.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::engine::WeightDistribution;
use crate::error::Result;

/// A single-feature threshold classifier. Rows with `value <= threshold`
/// are predicted `polarity`, the rest `-polarity`. Thresholds sit at
/// midpoints between consecutive distinct feature values, with `-inf` and
/// `+inf` sentinels for the two constant classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    pub threshold: f64,
    /// `+1` or `-1`; the label assigned to the low side.
    pub polarity: i8,
    /// Weighted 0/1 error achieved on the distribution it was fit under.
    pub training_weighted_error: f64,
}

impl Stump {
    /// Prediction for a single feature value.
    #[inline]
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

    /// Elementwise prediction over a dataset; errors if the stump's feature
    /// column does not exist.
    pub fn predict(&self, d: &Dataset) -> Result<Vec<Label>> {
        let column = d.column(self.feature_index)?;
        Ok(column.iter().map(|&v| self.classify(v)).collect())
    }
}

/// Two weighted errors within this distance are treated as tied, so that
/// float-accumulation noise cannot flip a tie-break between candidates
/// whose true errors are equal (e.g. equal misclassification counts under
/// uniform weights that are not exactly representable).
pub const ERROR_TOLERANCE: f64 = 1e-12;

/// Candidate ranking: weighted error first (tolerance-tied), then feature
/// index, then threshold, then polarity `+1` before `-1`.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    error: f64,
    feature: usize,
    threshold: f64,
    polarity: i8,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if (self.error - other.error).abs() > ERROR_TOLERANCE {
            return self.error < other.error;
        }
        if self.feature != other.feature {
            return self.feature < other.feature;
        }
        if self.threshold != other.threshold {
            return self.threshold < other.threshold;
        }
        self.polarity > other.polarity
    }
}

// Compensated accumulator; keeps sweep error noise orders of magnitude
// below ERROR_TOLERANCE even at census-scale row counts.
#[derive(Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum
    }
}

/// Reusable stump searcher. Sorting row indices per feature depends only on
/// the feature geometry, so it is done once and shared across boosting
/// rounds while the weights evolve.
pub struct StumpFitter {
    orders: Vec<Vec<u32>>,
}

impl StumpFitter {
    pub fn new(d: &Dataset) -> Self {
        let orders = (0..d.column_count())
            .map(|f| {
                let column = d.column(f).expect("column in range");
                let mut order: Vec<u32> = (0..column.len() as u32).collect();
                order.sort_unstable_by(|&a, &b| column[a as usize].total_cmp(&column[b as usize]));
                order
            })
            .collect();
        StumpFitter { orders }
    }

    /// Minimum-weighted-error stump over every (feature, midpoint, polarity)
    /// candidate. A dataset whose entire weight sits on one class yields a
    /// constant stump (infinite threshold) predicting that class.
    pub fn fit(&self, d: &Dataset, w: &WeightDistribution) -> Stump {
        let weights = w.as_slice();
        debug_assert_eq!(weights.len(), d.row_count());
        let labels = d.labels();

        let mut positive = Accumulator::default();
        let mut negative = Accumulator::default();
        for (wi, label) in weights.iter().zip(labels) {
            if label.is_positive() {
                positive.add(*wi);
            } else {
                negative.add(*wi);
            }
        }
        let positive_mass = positive.value();
        let negative_mass = negative.value();

        // Constant classifiers, shared by every feature; evaluated against
        // feature 0 so the tie-break ranks them ahead of identical-error
        // candidates on later features.
        let mut best = Candidate {
            error: positive_mass,
            feature: 0,
            threshold: f64::NEG_INFINITY,
            polarity: 1,
        };
        for candidate in [
            Candidate {
                error: negative_mass,
                feature: 0,
                threshold: f64::NEG_INFINITY,
                polarity: -1,
            },
            Candidate {
                error: negative_mass,
                feature: 0,
                threshold: f64::INFINITY,
                polarity: 1,
            },
            Candidate {
                error: positive_mass,
                feature: 0,
                threshold: f64::INFINITY,
                polarity: -1,
            },
        ] {
            if candidate.beats(&best) {
                best = candidate;
            }
        }

        for (feature, order) in self.orders.iter().enumerate() {
            let column = d.column(feature).expect("column in range");
            let mut pos_low = Accumulator::default();
            let mut neg_low = Accumulator::default();
            let mut i = 0;
            while i < order.len() {
                let value = column[order[i] as usize];
                // Consume the whole run of equal values before cutting.
                while i < order.len() && column[order[i] as usize] == value {
                    let row = order[i] as usize;
                    if labels[row].is_positive() {
                        pos_low.add(weights[row]);
                    } else {
                        neg_low.add(weights[row]);
                    }
                    i += 1;
                }
                if i == order.len() {
                    break;
                }
                let next = column[order[i] as usize];
                let mut threshold = 0.5 * (value + next);
                // Midpoints of near-adjacent floats can round up into the
                // next value; fall back to the lower value, which still
                // separates under the `<=` convention.
                if threshold >= next {
                    threshold = value;
                }
                let err_pos = neg_low.value() + (positive_mass - pos_low.value());
                let err_neg = pos_low.value() + (negative_mass - neg_low.value());
                for (error, polarity) in [(err_pos, 1i8), (err_neg, -1i8)] {
                    let candidate = Candidate {
                        error,
                        feature,
                        threshold,
                        polarity,
                    };
                    if candidate.beats(&best) {
                        best = candidate;
                    }
                }
            }
        }

        Stump {
            feature_index: best.feature,
            threshold: best.threshold,
            polarity: best.polarity,
            training_weighted_error: best.error.max(0.0),
        }
    }
}

/// One-shot fit; builds the per-feature sort orders and discards them.
pub fn fit_stump(d: &Dataset, w: &WeightDistribution) -> Stump {
    StumpFitter::new(d).fit(d, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;

    fn one_dim(xs: &[f64], ys: &[Label]) -> Dataset {
        let groups: Vec<Group> = (0..xs.len())
            .map(|i| {
                if i % 2 == 0 {
                    Group::Protected
                } else {
                    Group::NonProtected
                }
            })
            .collect();
        Dataset::new(vec![xs.to_vec()], ys.to_vec(), groups, vec!["x".into()]).unwrap()
    }

    #[test]
    fn separable_data_yields_zero_error_cut() {
        use Label::{Negative as Neg, Positive as Pos};
        let d = one_dim(&[1.0, 2.0, 3.0, 4.0], &[Neg, Neg, Pos, Pos]);
        let w = WeightDistribution::uniform(4);
        let stump = fit_stump(&d, &w);
        assert_eq!(stump.feature_index, 0);
        assert_eq!(stump.threshold, 2.5);
        assert_eq!(stump.polarity, -1);
        assert_eq!(stump.training_weighted_error, 0.0);
    }

    #[test]
    fn heavy_weight_isolates_single_row() {
        use Label::{Negative as Neg, Positive as Pos};
        let d = one_dim(&[1.0, 2.0, 3.0, 4.0], &[Pos, Neg, Neg, Neg]);
        let w = WeightDistribution::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let stump = fit_stump(&d, &w);
        assert_eq!(stump.threshold, 1.5);
        assert_eq!(stump.polarity, 1);
        assert_eq!(stump.training_weighted_error, 0.0);
    }

    #[test]
    fn two_point_optimum_is_unique_interior_cut() {
        use Label::{Negative as Neg, Positive as Pos};
        let d = one_dim(&[1.0, 2.0], &[Pos, Neg]);
        let w = WeightDistribution::uniform(2);
        let stump = fit_stump(&d, &w);
        assert_eq!(stump.threshold, 1.5);
        assert_eq!(stump.polarity, 1);
        assert_eq!(stump.training_weighted_error, 0.0);
    }

    #[test]
    fn constant_label_ties_break_to_lower_threshold() {
        // Everything positive: (-inf, -1) and (+inf, +1) both achieve zero
        // error; the lower threshold wins.
        let d = one_dim(&[1.0, 2.0], &[Label::Positive, Label::Positive]);
        let w = WeightDistribution::uniform(2);
        let stump = fit_stump(&d, &w);
        assert_eq!(stump.threshold, f64::NEG_INFINITY);
        assert_eq!(stump.polarity, -1);
        assert_eq!(stump.training_weighted_error, 0.0);
        assert_eq!(stump.classify(5.0), Label::Positive);
    }

    #[test]
    fn boundary_value_goes_to_low_side() {
        let stump = Stump {
            feature_index: 0,
            threshold: 2.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };
        assert_eq!(stump.classify(1.0), Label::Negative);
        assert_eq!(stump.classify(2.5), Label::Negative);
        assert_eq!(stump.classify(2.6), Label::Positive);
    }

    #[test]
    fn predict_is_elementwise_and_checks_arity() {
        use Label::{Negative as Neg, Positive as Pos};
        let d = one_dim(&[1.0, 2.5, 4.0], &[Neg, Neg, Pos]);
        let stump = Stump {
            feature_index: 0,
            threshold: 2.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };
        assert_eq!(stump.predict(&d).unwrap(), vec![Neg, Neg, Pos]);

        let missing = Stump {
            feature_index: 3,
            threshold: 0.0,
            polarity: 1,
            training_weighted_error: 0.0,
        };
        assert!(missing.predict(&d).is_err());
    }
}
