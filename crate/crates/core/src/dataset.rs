//! In-memory tabular data: signed binary labels, binary group membership,
//! dense numeric features, plus deterministic splitting and a synthetic
//! biased-data generator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Subset};
use crate::rng::Rng;

/// Signed binary class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1.0` or `-1.0`; the representation used in margin arithmetic.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// Prediction from an ensemble margin. An exact zero margin is the
    /// negative class by convention.
    #[inline]
    pub fn from_margin(margin: f64) -> Label {
        if margin > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }
}

/// Membership in the protected or non-protected group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Protected,
    NonProtected,
}

impl Group {
    #[inline]
    pub fn is_protected(self) -> bool {
        matches!(self, Group::Protected)
    }
}

/// Immutable tabular dataset. Features are stored column-major since every
/// consumer (stump fitting, stump prediction) walks one column at a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<Label>,
    groups: Vec<Group>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, validating shape consistency and that every feature
    /// value is finite (ingestion removes missing values, so none may remain).
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<Label>,
        groups: Vec<Group>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let rows = labels.len();
        if rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if groups.len() != rows {
            return Err(Error::LengthMismatch {
                left: rows,
                right: groups.len(),
            });
        }
        if feature_names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: columns.len(),
                right: feature_names.len(),
            });
        }
        if columns.is_empty() {
            return Err(Error::InvalidDataset(String::from("no feature columns")));
        }
        for (idx, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::LengthMismatch {
                    left: rows,
                    right: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in column {idx} ({}) at row {row}",
                    feature_names[idx]
                )));
            }
        }
        Ok(Dataset {
            columns,
            labels,
            groups,
            feature_names,
        })
    }

    #[inline]
    pub fn row_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, index: usize) -> Result<&[f64]> {
        self.columns
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::FeatureOutOfRange {
                index,
                columns: self.columns.len(),
            })
    }

    #[inline]
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    #[inline]
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// (positives, negatives)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        (pos, self.labels.len() - pos)
    }

    /// (protected, non-protected)
    pub fn group_counts(&self) -> (usize, usize) {
        let prot = self.groups.iter().filter(|g| g.is_protected()).count();
        (prot, self.groups.len() - prot)
    }

    /// Training requires both classes and both groups to be represented.
    pub fn check_training_viable(&self) -> Result<()> {
        let (pos, neg) = self.class_counts();
        if pos == 0 {
            return Err(Error::UndefinedRate {
                subset: Subset::Positive,
            });
        }
        if neg == 0 {
            return Err(Error::UndefinedRate {
                subset: Subset::Negative,
            });
        }
        let (prot, nonprot) = self.group_counts();
        if prot == 0 {
            return Err(Error::UndefinedRate {
                subset: Subset::Protected,
            });
        }
        if nonprot == 0 {
            return Err(Error::UndefinedRate {
                subset: Subset::NonProtected,
            });
        }
        Ok(())
    }

    /// Errors with the first empty group-by-class cell, if any. Fairness
    /// deltas over false-negative/false-positive rates need all four.
    pub fn check_group_class_cells(&self) -> Result<()> {
        let mut counts = [0usize; 4];
        for (label, group) in self.labels.iter().zip(&self.groups) {
            let idx = match (group, label) {
                (Group::Protected, Label::Positive) => 0,
                (Group::Protected, Label::Negative) => 1,
                (Group::NonProtected, Label::Positive) => 2,
                (Group::NonProtected, Label::Negative) => 3,
            };
            counts[idx] += 1;
        }
        const SUBSETS: [Subset; 4] = [
            Subset::ProtectedPositive,
            Subset::ProtectedNegative,
            Subset::NonProtectedPositive,
            Subset::NonProtectedNegative,
        ];
        for (count, subset) in counts.iter().zip(SUBSETS) {
            if *count == 0 {
                return Err(Error::UndefinedRate { subset });
            }
        }
        Ok(())
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.row_count()) {
            return Err(Error::InvalidDataset(format!(
                "row index {bad} out of range for {} rows",
                self.row_count()
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let groups = rows.iter().map(|&r| self.groups[r]).collect();
        Ok(Dataset {
            columns,
            labels,
            groups,
            feature_names: self.feature_names.clone(),
        })
    }
}

/// Parameters for deterministic train/test and train/validation splitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratified_validation: bool,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("test_fraction", self.test_fraction),
            ("validation_fraction", self.validation_fraction),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must lie strictly between 0 and 1, got {value}"
                )));
            }
        }
        Ok(())
    }
}

fn part_sizes(total: usize, fraction: f64) -> (usize, usize) {
    let mut held_out = libm::round(total as f64 * fraction) as usize;
    held_out = held_out.clamp(1, total.saturating_sub(1).max(1));
    (total - held_out, held_out)
}

fn check_part(d: &Dataset, part: &'static str, seed: u64) -> Result<()> {
    d.check_training_viable().map_err(|e| match e {
        Error::UndefinedRate { subset } => Error::DegenerateSplit { part, subset, seed },
        other => other,
    })
}

/// Random partition into (train, test) by `spec.seed` and
/// `spec.test_fraction`. Both parts must keep both classes and both groups,
/// otherwise the seed is rejected with the violated invariant named.
pub fn split_train_test(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    d.check_training_viable()?;
    let n = d.row_count();
    let (_, n_test) = part_sizes(n, spec.test_fraction);

    let mut order: Vec<usize> = (0..n).collect();
    Rng::seed_from(spec.seed).shuffle(&mut order);
    let mut test_rows: Vec<usize> = order[..n_test].to_vec();
    let mut train_rows: Vec<usize> = order[n_test..].to_vec();
    // Keep original row order inside each part.
    test_rows.sort_unstable();
    train_rows.sort_unstable();

    let train = d.select_rows(&train_rows)?;
    let test = d.select_rows(&test_rows)?;
    check_part(&train, "train", spec.seed)?;
    check_part(&test, "test", spec.seed)?;
    Ok((train, test))
}

/// Splits off a validation set, stratified by class when
/// `spec.stratified_validation` is set: each class contributes
/// `round(count * validation_fraction)` rows, so per-class proportions match
/// the input within one instance.
pub fn split_train_validation(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    d.check_training_viable()?;
    let mut rng = Rng::seed_from(spec.seed);

    let mut validation_rows: Vec<usize> = Vec::new();
    let mut train_rows: Vec<usize> = Vec::new();
    if spec.stratified_validation {
        for class in [Label::Positive, Label::Negative] {
            let mut members: Vec<usize> = (0..d.row_count())
                .filter(|&r| d.labels()[r] == class)
                .collect();
            rng.shuffle(&mut members);
            let (_, n_val) = part_sizes(members.len(), spec.validation_fraction);
            validation_rows.extend_from_slice(&members[..n_val]);
            train_rows.extend_from_slice(&members[n_val..]);
        }
    } else {
        let n = d.row_count();
        let (_, n_val) = part_sizes(n, spec.validation_fraction);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        validation_rows.extend_from_slice(&order[..n_val]);
        train_rows.extend_from_slice(&order[n_val..]);
    }
    validation_rows.sort_unstable();
    train_rows.sort_unstable();

    let train = d.select_rows(&train_rows)?;
    let validation = d.select_rows(&validation_rows)?;
    check_part(&train, "train", spec.seed)?;
    check_part(&validation, "validation", spec.seed)?;
    Ok((train, validation))
}

/// Parameters for the synthetic biased-data generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub positive_fraction: f64,
    pub protected_fraction: f64,
    /// Displacement of protected-group positives toward the negative-class
    /// region; zero makes the groups exchangeable.
    pub bias_shift: f64,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidSpec(format!(
                "n must be at least 8, got {}",
                self.n
            )));
        }
        for (name, value) in [
            ("positive_fraction", self.positive_fraction),
            ("protected_fraction", self.protected_fraction),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must lie strictly between 0 and 1, got {value}"
                )));
            }
        }
        if !self.noise.is_finite() || self.noise <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "noise must be positive, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

const POSITIVE_CENTER: f64 = 2.0;
const NEGATIVE_CENTER: f64 = 0.0;

/// Two-feature Gaussian blobs per class. Protected positives are displaced
/// toward the negative-class center: by the full `bias_shift` along the
/// first feature and half of it along the second. A cost-blind learner
/// therefore picks up group-dependent error rates, while the second feature
/// retains enough signal for a re-weighted ensemble to recover the group.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::seed_from(spec.seed);

    let n = spec.n;
    let n_pos = (libm::round(n as f64 * spec.positive_fraction) as usize).clamp(1, n - 1);
    let n_neg = n - n_pos;
    let mut n_prot_pos = (libm::round(n_pos as f64 * spec.protected_fraction) as usize).min(n_pos);
    let mut n_prot_neg = (libm::round(n_neg as f64 * spec.protected_fraction) as usize).min(n_neg);
    // Rounding may make a group empty on tiny inputs; nudge inside the
    // larger class so the dataset stays trainable.
    if n_prot_pos + n_prot_neg == 0 {
        if n_neg >= n_pos {
            n_prot_neg = 1;
        } else {
            n_prot_pos = 1;
        }
    }
    if n_prot_pos == n_pos && n_prot_neg == n_neg {
        if n_neg >= n_pos {
            n_prot_neg -= 1;
        } else {
            n_prot_pos -= 1;
        }
    }

    let mut rows: Vec<(f64, f64, Label, Group)> = Vec::with_capacity(n);
    for i in 0..n_pos {
        let group = if i < n_prot_pos {
            Group::Protected
        } else {
            Group::NonProtected
        };
        let (center0, center1) = if group.is_protected() {
            (
                POSITIVE_CENTER - spec.bias_shift,
                POSITIVE_CENTER - 0.5 * spec.bias_shift,
            )
        } else {
            (POSITIVE_CENTER, POSITIVE_CENTER)
        };
        let x0 = center0 + spec.noise * rng.next_gaussian();
        let x1 = center1 + spec.noise * rng.next_gaussian();
        rows.push((x0, x1, Label::Positive, group));
    }
    for i in 0..n_neg {
        let group = if i < n_prot_neg {
            Group::Protected
        } else {
            Group::NonProtected
        };
        let x0 = NEGATIVE_CENTER + spec.noise * rng.next_gaussian();
        let x1 = NEGATIVE_CENTER + spec.noise * rng.next_gaussian();
        rows.push((x0, x1, Label::Negative, group));
    }
    rng.shuffle(&mut rows);

    let columns = alloc::vec![
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
    ];
    let labels = rows.iter().map(|r| r.2).collect();
    let groups = rows.iter().map(|r| r.3).collect();
    Dataset::new(
        columns,
        labels,
        groups,
        alloc::vec![String::from("f0"), String::from("f1")],
    )
}
