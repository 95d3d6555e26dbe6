//! Group-conditioned confusion accounting and the predictive / fairness
//! measures derived from it.
//!
//! Signed deltas follow the convention "non-protected rate minus protected
//! rate" throughout, so a positive statistical-parity delta means the
//! non-protected group receives more positive predictions. Reported scalars
//! are magnitudes; the signed values are exposed separately because cost
//! assignment needs the sign.

use serde::{Deserialize, Serialize};

use crate::dataset::{Group, Label};
use crate::error::{Error, Result, Subset};

/// Exact prediction tallies for one group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTally {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
}

impl GroupTally {
    #[inline]
    pub fn positives(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    #[inline]
    pub fn negatives(&self) -> usize {
        self.true_negatives + self.false_positives
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.positives() + self.negatives()
    }

    /// Rows predicted positive, regardless of truth.
    #[inline]
    pub fn positive_predictions(&self) -> usize {
        self.true_positives + self.false_positives
    }
}

/// Confusion counts split by protected / non-protected group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub protected: GroupTally,
    pub non_protected: GroupTally,
}

fn rate(numerator: usize, denominator: usize, subset: Subset) -> Result<f64> {
    if denominator == 0 {
        return Err(Error::UndefinedRate { subset });
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Tallies predictions against truth, per group. Inputs must be equal-length.
pub fn confusion_by_group(
    truth: &[Label],
    predictions: &[Label],
    groups: &[Group],
) -> Result<GroupConfusion> {
    if truth.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predictions.len(),
        });
    }
    if truth.len() != groups.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: groups.len(),
        });
    }
    let mut confusion = GroupConfusion::default();
    for ((y, pred), group) in truth.iter().zip(predictions).zip(groups) {
        let tally = match group {
            Group::Protected => &mut confusion.protected,
            Group::NonProtected => &mut confusion.non_protected,
        };
        match (y, pred) {
            (Label::Positive, Label::Positive) => tally.true_positives += 1,
            (Label::Positive, Label::Negative) => tally.false_negatives += 1,
            (Label::Negative, Label::Negative) => tally.true_negatives += 1,
            (Label::Negative, Label::Positive) => tally.false_positives += 1,
        }
    }
    Ok(confusion)
}

/// Disparate mistreatment along with the two signed deltas that compose it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparateMistreatment {
    /// `|delta_fpr| + |delta_fnr|`, in `[0, 2]`.
    pub magnitude: f64,
    pub delta_fpr: f64,
    pub delta_fnr: f64,
}

impl GroupConfusion {
    fn total(&self) -> GroupTally {
        GroupTally {
            true_positives: self.protected.true_positives + self.non_protected.true_positives,
            false_negatives: self.protected.false_negatives + self.non_protected.false_negatives,
            true_negatives: self.protected.true_negatives + self.non_protected.true_negatives,
            false_positives: self.protected.false_positives + self.non_protected.false_positives,
        }
    }

    /// Overall misclassification fraction.
    pub fn error_rate(&self) -> Result<f64> {
        let t = self.total();
        if t.size() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok((t.false_negatives + t.false_positives) as f64 / t.size() as f64)
    }

    /// One minus the mean of overall TPR and TNR; insensitive to class
    /// imbalance.
    pub fn balanced_error_rate(&self) -> Result<f64> {
        let t = self.total();
        let tpr = rate(t.true_positives, t.positives(), Subset::Positive)?;
        let tnr = rate(t.true_negatives, t.negatives(), Subset::Negative)?;
        Ok(1.0 - 0.5 * (tpr + tnr))
    }

    /// Signed difference in positive-prediction rates: non-protected minus
    /// protected.
    pub fn statistical_parity(&self) -> Result<f64> {
        let nonprot = rate(
            self.non_protected.positive_predictions(),
            self.non_protected.size(),
            Subset::NonProtected,
        )?;
        let prot = rate(
            self.protected.positive_predictions(),
            self.protected.size(),
            Subset::Protected,
        )?;
        Ok(nonprot - prot)
    }

    /// Signed difference in false-negative rates over true positives:
    /// non-protected minus protected.
    pub fn equal_opportunity(&self) -> Result<f64> {
        let nonprot = rate(
            self.non_protected.false_negatives,
            self.non_protected.positives(),
            Subset::NonProtectedPositive,
        )?;
        let prot = rate(
            self.protected.false_negatives,
            self.protected.positives(),
            Subset::ProtectedPositive,
        )?;
        Ok(nonprot - prot)
    }

    /// Signed difference in false-positive rates over true negatives:
    /// non-protected minus protected.
    pub fn false_positive_delta(&self) -> Result<f64> {
        let nonprot = rate(
            self.non_protected.false_positives,
            self.non_protected.negatives(),
            Subset::NonProtectedNegative,
        )?;
        let prot = rate(
            self.protected.false_positives,
            self.protected.negatives(),
            Subset::ProtectedNegative,
        )?;
        Ok(nonprot - prot)
    }

    /// `|delta_fpr| + |delta_fnr|` plus the signed components.
    pub fn disparate_mistreatment(&self) -> Result<DisparateMistreatment> {
        let delta_fnr = self.equal_opportunity()?;
        let delta_fpr = self.false_positive_delta()?;
        Ok(DisparateMistreatment {
            magnitude: delta_fpr.abs() + delta_fnr.abs(),
            delta_fpr,
            delta_fnr,
        })
    }

    pub fn tpr(&self, group: Group) -> Result<f64> {
        let (tally, subset) = match group {
            Group::Protected => (&self.protected, Subset::ProtectedPositive),
            Group::NonProtected => (&self.non_protected, Subset::NonProtectedPositive),
        };
        rate(tally.true_positives, tally.positives(), subset)
    }

    pub fn tnr(&self, group: Group) -> Result<f64> {
        let (tally, subset) = match group {
            Group::Protected => (&self.protected, Subset::ProtectedNegative),
            Group::NonProtected => (&self.non_protected, Subset::NonProtectedNegative),
        };
        rate(tally.true_negatives, tally.negatives(), subset)
    }

    pub fn positive_prediction_rate(&self, group: Group) -> Result<f64> {
        let (tally, subset) = match group {
            Group::Protected => (&self.protected, Subset::Protected),
            Group::NonProtected => (&self.non_protected, Subset::NonProtected),
        };
        rate(tally.positive_predictions(), tally.size(), subset)
    }
}

/// Flat report of every predictive and fairness measure; serializes to a
/// flat JSON object with these exact key names.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub error_rate: f64,
    pub balanced_error_rate: f64,
    /// `|delta_sp|`; the reported scalar.
    pub statistical_parity: f64,
    pub statistical_parity_signed: f64,
    /// `|delta_fnr|`; the reported scalar.
    pub equal_opportunity: f64,
    pub equal_opportunity_signed: f64,
    pub disparate_mistreatment: f64,
    pub delta_fpr_signed: f64,
    pub tpr_protected: f64,
    pub tpr_non_protected: f64,
    pub tnr_protected: f64,
    pub tnr_non_protected: f64,
    pub positive_rate_protected: f64,
    pub positive_rate_non_protected: f64,
}

impl MetricReport {
    /// Field names in declaration order; the stable column order for
    /// tabular export.
    pub const FIELDS: [&'static str; 14] = [
        "error_rate",
        "balanced_error_rate",
        "statistical_parity",
        "statistical_parity_signed",
        "equal_opportunity",
        "equal_opportunity_signed",
        "disparate_mistreatment",
        "delta_fpr_signed",
        "tpr_protected",
        "tpr_non_protected",
        "tnr_protected",
        "tnr_non_protected",
        "positive_rate_protected",
        "positive_rate_non_protected",
    ];

    pub fn from_confusion(c: &GroupConfusion) -> Result<Self> {
        let dm = c.disparate_mistreatment()?;
        let sp = c.statistical_parity()?;
        Ok(MetricReport {
            error_rate: c.error_rate()?,
            balanced_error_rate: c.balanced_error_rate()?,
            statistical_parity: sp.abs(),
            statistical_parity_signed: sp,
            equal_opportunity: dm.delta_fnr.abs(),
            equal_opportunity_signed: dm.delta_fnr,
            disparate_mistreatment: dm.magnitude,
            delta_fpr_signed: dm.delta_fpr,
            tpr_protected: c.tpr(Group::Protected)?,
            tpr_non_protected: c.tpr(Group::NonProtected)?,
            tnr_protected: c.tnr(Group::Protected)?,
            tnr_non_protected: c.tnr(Group::NonProtected)?,
            positive_rate_protected: c.positive_prediction_rate(Group::Protected)?,
            positive_rate_non_protected: c.positive_prediction_rate(Group::NonProtected)?,
        })
    }

    /// Values in `FIELDS` order.
    pub fn as_array(&self) -> [f64; 14] {
        [
            self.error_rate,
            self.balanced_error_rate,
            self.statistical_parity,
            self.statistical_parity_signed,
            self.equal_opportunity,
            self.equal_opportunity_signed,
            self.disparate_mistreatment,
            self.delta_fpr_signed,
            self.tpr_protected,
            self.tpr_non_protected,
            self.tnr_protected,
            self.tnr_non_protected,
            self.positive_rate_protected,
            self.positive_rate_non_protected,
        ]
    }

    pub fn from_array(values: [f64; 14]) -> Self {
        MetricReport {
            error_rate: values[0],
            balanced_error_rate: values[1],
            statistical_parity: values[2],
            statistical_parity_signed: values[3],
            equal_opportunity: values[4],
            equal_opportunity_signed: values[5],
            disparate_mistreatment: values[6],
            delta_fpr_signed: values[7],
            tpr_protected: values[8],
            tpr_non_protected: values[9],
            tnr_protected: values[10],
            tnr_non_protected: values[11],
            positive_rate_protected: values[12],
            positive_rate_non_protected: values[13],
        }
    }
}
