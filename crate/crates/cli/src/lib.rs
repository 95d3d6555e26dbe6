//! IO companion to `adafair-core`: CSV ingestion with schema-driven
//! preprocessing, versioned model artifacts, and the experiment harness
//! behind the `adafair` binary.

pub mod artifact;
pub mod error;
pub mod experiment;
pub mod loader;
pub mod schema;

pub use artifact::ModelArtifact;
pub use error::{HarnessError, Result};
pub use experiment::{
    emit_results, emit_round_trace, run_experiment, run_trace, DataSource, ExperimentConfig,
    ExperimentResult, OutputFormat, RunRecord,
};
pub use loader::{load_csv, load_csv_with_summary, write_csv};
pub use schema::DataSchema;
