//! Run-time engine configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::knowledge::UsefulnessVariant;
use crate::uncertainty::Paradigm;

/// Constructive-adaptation search strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    #[default]
    FirstFit,
    BestFit,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(String),
    #[error("failed to parse config file: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

/// Everything tunable about a run. `ut` and `epsilon`, when set, override
/// the values shipped inside the utility-model file; the rest has no other
/// source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub ut: Option<f64>,
    pub epsilon: Option<f64>,
    /// Minimal similarity for accepting retrieved cases.
    pub beta: f64,
    pub paradigm: Paradigm,
    /// Uncertainty cut-off for the hybrid paradigm.
    pub alpha_threshold: f64,
    pub heuristic: Heuristic,
    pub usefulness_variant: UsefulnessVariant,
    /// Upper bound on enumerated completions of an uncertain state.
    pub kappa_cap: u64,
    /// Upper bound on candidate states examined by constructive search.
    pub enum_cap: u64,
    pub notes: Option<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ut: None,
            epsilon: None,
            beta: 0.7,
            paradigm: Paradigm::Hybrid,
            alpha_threshold: 0.5,
            heuristic: Heuristic::FirstFit,
            usefulness_variant: UsefulnessVariant::Paper,
            kappa_cap: 1_000_000,
            enum_cap: 1_000_000,
            notes: None,
        }
    }
}

impl EngineConfig {
    pub fn from_json_str(json: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig =
            serde_json::from_str(json).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        EngineConfig::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if let Some(ut) = self.ut {
            if !(ut > 0.0 && ut < 1.0) {
                return fail(format!("ut {ut} is outside (0, 1)"));
            }
        }
        if let Some(epsilon) = self.epsilon {
            if !epsilon.is_finite() || epsilon < 0.0 {
                return fail(format!("epsilon {epsilon} must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return fail(format!("beta {} is outside [0, 1]", self.beta));
        }
        if !(0.0..=1.0).contains(&self.alpha_threshold) {
            return fail(format!(
                "alpha_threshold {} is outside [0, 1]",
                self.alpha_threshold
            ));
        }
        if self.kappa_cap == 0 {
            return fail("kappa_cap must be at least 1".into());
        }
        if self.enum_cap == 0 {
            return fail("enum_cap must be at least 1".into());
        }
        Ok(())
    }
}
