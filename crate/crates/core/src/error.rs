//! Error types shared across the crate.

use alloc::string::String;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// A group/class subset of a dataset, used to name which denominator was
/// empty when a rate is undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subset {
    Protected,
    NonProtected,
    Positive,
    Negative,
    ProtectedPositive,
    ProtectedNegative,
    NonProtectedPositive,
    NonProtectedNegative,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Subset::Protected => "protected group",
            Subset::NonProtected => "non-protected group",
            Subset::Positive => "positive class",
            Subset::Negative => "negative class",
            Subset::ProtectedPositive => "protected positives",
            Subset::ProtectedNegative => "protected negatives",
            Subset::NonProtectedPositive => "non-protected positives",
            Subset::NonProtectedNegative => "non-protected negatives",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    /// A rate's denominator subset is empty; returning 0 instead would fake
    /// fairness, so this is always surfaced.
    #[error("rate undefined: {subset} is empty")]
    UndefinedRate { subset: Subset },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dataset invariant violated: {0}")]
    InvalidDataset(String),

    #[error("degenerate split: {part} part has empty {subset} (seed {seed})")]
    DegenerateSplit {
        part: &'static str,
        subset: Subset,
        seed: u64,
    },

    #[error("feature index {index} out of range for {columns} columns")]
    FeatureOutOfRange { index: usize, columns: usize },

    #[error("training produced no usable rounds: {0}")]
    NoUsableRounds(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("prefix selection failed: {subset} is empty in the validation set")]
    SelectionDegenerate { subset: Subset },

    #[error(
        "training-error bound violated at round {round}: error {training_error} > bound {bound} \
         (z_product {z_product}, gamma {gamma}); this indicates an implementation bug"
    )]
    BoundViolation {
        round: usize,
        training_error: f64,
        bound: f64,
        z_product: f64,
        gamma: f64,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
