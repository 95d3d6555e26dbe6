//! Column-role schema for CSV ingestion, supplied as a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn default_sentinel() -> String {
    "?".to_string()
}

fn default_true() -> bool {
    true
}

/// Declares which columns carry the label and the protected attribute, how
/// their raw values map, and which columns are categorical (one-hot
/// encoded). Everything else is parsed as numeric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSchema {
    pub label_column: String,
    pub positive_label: String,
    pub protected_column: String,
    pub protected_value: String,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    /// Cells equal to this token (or empty) count as missing; the row is
    /// dropped. The census convention "?" is the default.
    #[serde(default = "default_sentinel")]
    pub missing_sentinel: String,
    /// Remove exact duplicate raw rows (compared pre-encoding, after the
    /// missing-value filter).
    #[serde(default = "default_true")]
    pub deduplicate: bool,
    /// Keep the protected attribute as a model feature. When it is not
    /// listed in `categorical_columns` it becomes a single 0/1 indicator
    /// column.
    #[serde(default = "default_true")]
    pub protected_as_feature: bool,
}

impl DataSchema {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Schema(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_file(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| HarnessError::Schema(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }
}
