//! CSV ingestion with the cleaning pipeline (missing-value filter,
//! duplicate removal, one-hot encoding), plus canonical CSV export for
//! round-tripping datasets.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use adafair_core::dataset::{Dataset, Group, Label};

use crate::error::{HarnessError, Result};
use crate::schema::DataSchema;

/// What the cleaning pipeline did to the raw file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub raw_rows: usize,
    pub dropped_missing: usize,
    pub dropped_duplicates: usize,
    pub rows: usize,
}

/// Loads and cleans a CSV per the schema. Fields are whitespace-trimmed
/// (census files pad after commas); rows with an empty or sentinel cell are
/// dropped first, then exact duplicate raw rows. Categorical columns are
/// one-hot encoded with category order fixed by first occurrence in file
/// order; every other non-role column must parse as a number.
pub fn load_csv(path: &Path, schema: &DataSchema) -> Result<Dataset> {
    load_csv_with_summary(path, schema).map(|(d, _)| d)
}

pub fn load_csv_with_summary(path: &Path, schema: &DataSchema) -> Result<(Dataset, LoadSummary)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();

    let column_index = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            HarnessError::Schema(format!(
                "column '{name}' not found in {} (header: {})",
                path.display(),
                headers.join(", ")
            ))
        })
    };
    let label_idx = column_index(&schema.label_column)?;
    let protected_idx = column_index(&schema.protected_column)?;
    let categorical: HashSet<usize> = schema
        .categorical_columns
        .iter()
        .map(|name| column_index(name))
        .collect::<Result<_>>()?;

    let mut summary = LoadSummary::default();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
        summary.raw_rows += 1;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.len() != headers.len() {
            return Err(HarnessError::Data(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                summary.raw_rows,
                cells.len(),
                headers.len()
            )));
        }
        if cells
            .iter()
            .any(|c| c.is_empty() || *c == schema.missing_sentinel)
        {
            summary.dropped_missing += 1;
            continue;
        }
        if schema.deduplicate && !seen.insert(cells.clone()) {
            summary.dropped_duplicates += 1;
            continue;
        }
        rows.push(cells);
    }
    summary.rows = rows.len();
    if rows.is_empty() {
        return Err(HarnessError::Data(format!(
            "{}: no rows left after cleaning ({} read, {} missing, {} duplicates)",
            path.display(),
            summary.raw_rows,
            summary.dropped_missing,
            summary.dropped_duplicates
        )));
    }

    // The label column must be binary in the raw data with the declared
    // positive value present; the protected column must contain the
    // protected value and at least one other value (several non-protected
    // raw values are fine and all map to the non-protected group).
    let mut label_values: Vec<&str> = Vec::new();
    for row in &rows {
        let v = row[label_idx].as_str();
        if !label_values.contains(&v) {
            label_values.push(v);
        }
    }
    if !label_values.contains(&schema.positive_label.as_str()) {
        return Err(HarnessError::Data(format!(
            "label column '{}' never takes the positive value '{}' (saw: {})",
            schema.label_column,
            schema.positive_label,
            label_values.join(", ")
        )));
    }
    if label_values.len() != 2 {
        return Err(HarnessError::Data(format!(
            "label column '{}' must be binary, saw {} distinct values: {}",
            schema.label_column,
            label_values.len(),
            label_values.join(", ")
        )));
    }
    let protected_seen = rows
        .iter()
        .any(|r| r[protected_idx] == schema.protected_value);
    let non_protected_seen = rows
        .iter()
        .any(|r| r[protected_idx] != schema.protected_value);
    if !protected_seen || !non_protected_seen {
        return Err(HarnessError::Data(format!(
            "protected column '{}' must contain '{}' and at least one other value",
            schema.protected_column, schema.protected_value
        )));
    }

    let labels: Vec<Label> = rows
        .iter()
        .map(|r| {
            if r[label_idx] == schema.positive_label {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    let groups: Vec<Group> = rows
        .iter()
        .map(|r| {
            if r[protected_idx] == schema.protected_value {
                Group::Protected
            } else {
                Group::NonProtected
            }
        })
        .collect();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (idx, header) in headers.iter().enumerate() {
        if idx == label_idx {
            continue;
        }
        if idx == protected_idx && !categorical.contains(&idx) {
            if schema.protected_as_feature {
                names.push(format!("{header}={}", schema.protected_value));
                columns.push(
                    rows.iter()
                        .map(|r| {
                            if r[idx] == schema.protected_value {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                );
            }
            continue;
        }
        if categorical.contains(&idx) {
            // Category order fixed by first occurrence in file order.
            let mut order: Vec<&str> = Vec::new();
            let mut positions: HashMap<&str, usize> = HashMap::new();
            for row in &rows {
                let v = row[idx].as_str();
                if !positions.contains_key(v) {
                    positions.insert(v, order.len());
                    order.push(v);
                }
            }
            let mut encoded: Vec<Vec<f64>> = vec![vec![0.0; rows.len()]; order.len()];
            for (r, row) in rows.iter().enumerate() {
                encoded[positions[row[idx].as_str()]][r] = 1.0;
            }
            for (value, column) in order.iter().zip(encoded) {
                names.push(format!("{header}={value}"));
                columns.push(column);
            }
            continue;
        }
        let mut column = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let parsed: f64 = row[idx].parse().map_err(|_| {
                HarnessError::Data(format!(
                    "column '{header}' row {}: '{}' is not numeric; list the column \
                     under categorical_columns if it is categorical",
                    r + 1,
                    row[idx]
                ))
            })?;
            column.push(parsed);
        }
        names.push(header.clone());
        columns.push(column);
    }

    let dataset = Dataset::new(columns, labels, groups, names)?;
    Ok((dataset, summary))
}

/// Canonical label/group tokens used by [`write_csv`].
pub const LABEL_POSITIVE_TOKEN: &str = "+1";
pub const LABEL_NEGATIVE_TOKEN: &str = "-1";
pub const GROUP_PROTECTED_TOKEN: &str = "protected";
pub const GROUP_NON_PROTECTED_TOKEN: &str = "non-protected";

/// Writes a dataset as CSV: all feature columns, then `label` and `group`.
/// Floats are written in shortest round-trip form, so reloading with
/// [`export_schema`] reproduces the matrices bit for bit.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| HarnessError::Data(e.to_string()))?;
    let mut header: Vec<String> = d.feature_names().to_vec();
    header.push("label".to_string());
    header.push("group".to_string());
    writer
        .write_record(&header)
        .map_err(|e| HarnessError::Data(e.to_string()))?;

    let columns: Vec<&[f64]> = (0..d.column_count())
        .map(|c| d.column(c).expect("in range"))
        .collect();
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for row in 0..d.row_count() {
        record.clear();
        for column in &columns {
            record.push(format!("{}", column[row]));
        }
        record.push(
            match d.labels()[row] {
                Label::Positive => LABEL_POSITIVE_TOKEN,
                Label::Negative => LABEL_NEGATIVE_TOKEN,
            }
            .to_string(),
        );
        record.push(
            match d.groups()[row] {
                Group::Protected => GROUP_PROTECTED_TOKEN,
                Group::NonProtected => GROUP_NON_PROTECTED_TOKEN,
            }
            .to_string(),
        );
        writer
            .write_record(&record)
            .map_err(|e| HarnessError::Data(e.to_string()))?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))
}

/// Schema matching [`write_csv`] output. Deduplication is off and the
/// group column is not re-added as a feature, so a write/load cycle is the
/// identity.
pub fn export_schema() -> DataSchema {
    DataSchema {
        label_column: "label".to_string(),
        positive_label: LABEL_POSITIVE_TOKEN.to_string(),
        protected_column: "group".to_string(),
        protected_value: GROUP_PROTECTED_TOKEN.to_string(),
        categorical_columns: Vec::new(),
        missing_sentinel: "?".to_string(),
        deduplicate: false,
        protected_as_feature: false,
    }
}

/// Reorders/selects the columns of `d` to match `names`; prediction with a
/// stored model requires the exact training column layout.
pub fn align_to_features(d: &Dataset, names: &[String]) -> Result<Dataset> {
    let mut columns = Vec::with_capacity(names.len());
    for name in names {
        let idx = d
            .feature_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| {
                HarnessError::Data(format!(
                    "feature '{name}' required by the model is missing from the data"
                ))
            })?;
        columns.push(d.column(idx)?.to_vec());
    }
    Ok(Dataset::new(
        columns,
        d.labels().to_vec(),
        d.groups().to_vec(),
        names.to_vec(),
    )?)
}
