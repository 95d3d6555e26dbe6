//! Versioned JSON model artifact: config echo, learners, weights, selected
//! prefix, and the per-round trace. Loadable for prediction without
//! retraining.

use std::path::Path;

use adafair_core::dataset::{Dataset, Label};
use adafair_core::diagnostics::RoundTrace;
use adafair_core::engine::{EnsembleState, TrainConfig};
use adafair_core::stump::Stump;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const ARTIFACT_VERSION: u32 = 1;

/// JSON has no literal for infinities; constant stumps carry an infinite
/// threshold, so thresholds serialize as a number or the strings
/// "Infinity" / "-Infinity".
mod json_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else if *value > 0.0 {
            serializer.serialize_str("Infinity")
        } else {
            serializer.serialize_str("-Infinity")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"Infinity\" or \"-Infinity\", got \"{other}\""
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StumpRecord {
    pub feature: String,
    pub feature_index: usize,
    #[serde(with = "json_float")]
    pub threshold: f64,
    pub polarity: i8,
    pub weighted_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub config: TrainConfig,
    pub feature_names: Vec<String>,
    pub theta: usize,
    pub learners: Vec<StumpRecord>,
    pub alphas: Vec<f64>,
    pub z_values: Vec<f64>,
    pub traces: Vec<RoundTrace>,
}

impl ModelArtifact {
    pub fn from_state(state: &EnsembleState, feature_names: &[String]) -> Self {
        let learners = state
            .learners()
            .iter()
            .map(|s| StumpRecord {
                feature: feature_names
                    .get(s.feature_index)
                    .cloned()
                    .unwrap_or_else(|| format!("f{}", s.feature_index)),
                feature_index: s.feature_index,
                threshold: s.threshold,
                polarity: s.polarity,
                weighted_error: s.training_weighted_error,
            })
            .collect();
        ModelArtifact {
            version: ARTIFACT_VERSION,
            config: *state.config(),
            feature_names: feature_names.to_vec(),
            theta: state.theta(),
            learners,
            alphas: state.alphas().to_vec(),
            z_values: state.z_values().to_vec(),
            traces: state.round_traces().to_vec(),
        }
    }

    /// Rebuilds the ensemble (training margins are not stored; they are
    /// recomputable from the learners when diagnostics need them).
    pub fn to_state(&self) -> Result<EnsembleState> {
        if self.version != ARTIFACT_VERSION {
            return Err(HarnessError::Data(format!(
                "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
                self.version
            )));
        }
        let learners: Vec<Stump> = self
            .learners
            .iter()
            .map(|r| Stump {
                feature_index: r.feature_index,
                threshold: r.threshold,
                polarity: r.polarity,
                training_weighted_error: r.weighted_error,
            })
            .collect();
        Ok(EnsembleState::from_parts(
            learners,
            self.alphas.clone(),
            Vec::new(),
            self.traces.clone(),
            self.z_values.clone(),
            self.theta,
            self.config,
        )?)
    }

    /// Predicts with the stored prefix after aligning `data`'s columns to
    /// the training feature layout.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<Label>> {
        let aligned = crate::loader::align_to_features(data, &self.feature_names)?;
        let state = self.to_state()?;
        Ok(state.predict(&aligned)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use adafair_core::engine::{FairnessNotion, Mode};

    fn trace() -> RoundTrace {
        RoundTrace {
            round: 1,
            weighted_error: 0.25,
            alpha: 0.5,
            z: 0.9,
            delta_sp: 0.1,
            delta_fnr: -0.1,
            delta_fpr: 0.0,
            boosted_instances: 3,
            min_cost_product: 1.0,
            validation_balanced_error_rate: 0.2,
            validation_error_rate: 0.2,
            validation_fairness: 0.1,
            validation_objective: 0.3,
        }
    }

    #[test]
    fn infinite_thresholds_survive_json() {
        let artifact = ModelArtifact {
            version: ARTIFACT_VERSION,
            config: TrainConfig::new(1, FairnessNotion::StatisticalParity, Mode::AdaFair),
            feature_names: vec!["x".into()],
            theta: 1,
            learners: vec![StumpRecord {
                feature: "x".into(),
                feature_index: 0,
                threshold: f64::NEG_INFINITY,
                polarity: -1,
                weighted_error: 0.0,
            }],
            alphas: vec![1.0],
            z_values: vec![0.9],
            traces: vec![trace()],
        };
        let json = serde_json::to_string(&artifact).unwrap();
        assert!(json.contains("-Infinity"));
        let back: ModelArtifact = serde_json::from_str(&json).unwrap();
        assert_eq!(back, artifact);
        assert!(back.to_state().is_ok());
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut artifact = ModelArtifact {
            version: ARTIFACT_VERSION + 1,
            config: TrainConfig::new(1, FairnessNotion::StatisticalParity, Mode::AdaFair),
            feature_names: vec!["x".into()],
            theta: 1,
            learners: vec![],
            alphas: vec![],
            z_values: vec![],
            traces: vec![],
        };
        assert!(artifact.to_state().is_err());
        artifact.version = ARTIFACT_VERSION;
        // Still rejected: no learners.
        assert!(artifact.to_state().is_err());
    }
}
