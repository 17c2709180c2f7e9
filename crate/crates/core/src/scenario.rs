//! Scripted scenarios: an initial state plus timed perturbations that drive
//! the simulated managed system through a run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::schema::SystemSchema;
use crate::state::{AttributeValue, StateError, SystemState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file: {0}")]
    Io(String),
    #[error("failed to parse scenario file: {0}")]
    Parse(String),
    #[error("scenario is invalid: {0}")]
    Invalid(String),
    #[error("scenario was written for schema {found}, expected {expected}")]
    SchemaMismatch { expected: String, found: String },
    #[error(transparent)]
    State(#[from] StateError),
}

/// One perturbation batch: at `tick`, set each listed attribute to the given
/// value (JSON `null` drops it to `Uncertain`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub tick: u64,
    pub set: BTreeMap<String, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    /// Fingerprint of the schema this scenario targets; checked when present.
    #[serde(default)]
    pub schema_fingerprint: Option<String>,
    pub initial_state: SystemState,
    pub ticks: u64,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn from_json_str(json: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(json).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(e.to_string()))?;
        Scenario::from_json_str(&text)
    }

    pub fn validate(&self, schema: &SystemSchema) -> Result<(), ScenarioError> {
        if let Some(fingerprint) = &self.schema_fingerprint {
            let expected = schema.fingerprint();
            if fingerprint != &expected {
                return Err(ScenarioError::SchemaMismatch {
                    expected,
                    found: fingerprint.clone(),
                });
            }
        }
        schema.validate_state(&self.initial_state)?;
        let mut previous_tick = 0;
        for event in &self.events {
            if event.tick < 1 || event.tick > self.ticks {
                return Err(ScenarioError::Invalid(format!(
                    "event tick {} is outside 1..={}",
                    event.tick, self.ticks
                )));
            }
            if event.tick < previous_tick {
                return Err(ScenarioError::Invalid(format!(
                    "event ticks must be non-decreasing (saw {} after {})",
                    event.tick, previous_tick
                )));
            }
            previous_tick = event.tick;
            for (name, value) in &event.set {
                let attr = schema
                    .attribute(name)
                    .ok_or_else(|| StateError::UnknownAttribute(name.clone()))?;
                if let AttributeValue::Known(v) = value {
                    if !attr.contains(v) {
                        return Err(StateError::ValueNotInDomain {
                            attribute: name.clone(),
                            value: v.clone(),
                        }
                        .into());
                    }
                }
            }
        }
        Ok(())
    }
}
