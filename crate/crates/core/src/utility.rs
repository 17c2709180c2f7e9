//! Piecewise utility functions, their weighted geometric aggregation, and
//! request analysis (which attributes break the utility threshold, which
//! merely depress it).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::schema::SystemSchema;
use crate::state::{AttributeValue, SystemState};

/// Boolean expression over `attribute = value` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Atom { attribute: String, value: String },
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn atom(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Condition::Atom {
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    pub fn holds(&self, state: &SystemState) -> Result<bool, UtilityError> {
        match self {
            Condition::Atom { attribute, value } => match state.get(attribute) {
                Some(AttributeValue::Known(v)) => Ok(v == value),
                Some(AttributeValue::Uncertain) => {
                    Err(UtilityError::UncertainInput(attribute.clone()))
                }
                None => Err(UtilityError::MissingAttribute(attribute.clone())),
            },
            Condition::And(parts) => {
                for part in parts {
                    if !part.holds(state)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Condition::Or(parts) => {
                for part in parts {
                    if part.holds(state)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Condition::Not(inner) => Ok(!inner.holds(state)?),
        }
    }

    fn visit_atoms(&self, visit: &mut impl FnMut(&str, &str)) {
        match self {
            Condition::Atom { attribute, value } => visit(attribute, value),
            Condition::And(parts) | Condition::Or(parts) => {
                parts.iter().for_each(|p| p.visit_atoms(visit))
            }
            Condition::Not(inner) => inner.visit_atoms(visit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UtilityError {
    #[error("attribute `{0}` is uncertain; the state cannot be scored")]
    UncertainInput(String),
    #[error("attribute `{0}` is missing from the state")]
    MissingAttribute(String),
    #[error("function `{function}`: {problem}")]
    InvalidFunction { function: String, problem: String },
    #[error("duplicate utility function name `{0}`")]
    DuplicateFunction(String),
    #[error("utility model has no functions")]
    NoFunctions,
    #[error("utility threshold {0} is outside (0, 1)")]
    ThresholdOutOfRange(f64),
    #[error("margin {0} must be finite and non-negative")]
    MarginOutOfRange(f64),
    #[error("failed to read utility model file: {0}")]
    Io(String),
    #[error("failed to parse utility model file: {0}")]
    Parse(String),
}

/// One arm of a piecewise utility function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Condition,
    pub value: f64,
}

/// A piecewise-conditional utility function over a set of involved
/// attributes. Arms are tried in declaration order and the first matching
/// arm wins; the `default` value applies when none match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityFunction {
    name: String,
    involved: BTreeSet<String>,
    rules: Vec<Rule>,
    default: f64,
    weight: f64,
}

impl UtilityFunction {
    pub fn new(
        name: impl Into<String>,
        involved: impl IntoIterator<Item = String>,
        rules: Vec<Rule>,
        default: f64,
        weight: f64,
    ) -> Self {
        UtilityFunction {
            name: name.into(),
            involved: involved.into_iter().collect(),
            rules,
            default,
            weight,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn involved(&self) -> &BTreeSet<String> {
        &self.involved
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Value of the first arm whose condition holds, or the default.
    /// Fails with `UncertainInput` if any involved attribute is uncertain,
    /// even when no arm mentions it.
    pub fn eval(&self, state: &SystemState) -> Result<f64, UtilityError> {
        for name in &self.involved {
            match state.get(name) {
                Some(AttributeValue::Known(_)) => {}
                Some(AttributeValue::Uncertain) => {
                    return Err(UtilityError::UncertainInput(name.clone()))
                }
                None => return Err(UtilityError::MissingAttribute(name.clone())),
            }
        }
        for rule in &self.rules {
            if rule.when.holds(state)? {
                return Ok(rule.value);
            }
        }
        Ok(self.default)
    }

    fn validate(&self, schema: &SystemSchema) -> Result<(), UtilityError> {
        let fail = |problem: String| UtilityError::InvalidFunction {
            function: self.name.clone(),
            problem,
        };
        if !self.weight.is_finite() || self.weight <= 0.0 {
            return Err(fail(format!("non-positive weight {}", self.weight)));
        }
        if self.involved.is_empty() {
            return Err(fail("empty involved set".into()));
        }
        for name in &self.involved {
            if schema.attribute(name).is_none() {
                return Err(fail(format!("involved attribute `{name}` not in schema")));
            }
        }
        for value in self
            .rules
            .iter()
            .map(|r| r.value)
            .chain(std::iter::once(self.default))
        {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(fail(format!("arm value {value} outside [0, 1]")));
            }
        }
        let mut atom_problem = None;
        for rule in &self.rules {
            rule.when.visit_atoms(&mut |attr, value| {
                if atom_problem.is_some() {
                    return;
                }
                if !self.involved.contains(attr) {
                    atom_problem = Some(format!("atom references uninvolved attribute `{attr}`"));
                } else if !schema.attribute(attr).is_some_and(|a| a.contains(value)) {
                    atom_problem =
                        Some(format!("atom value `{value}` not in domain of `{attr}`"));
                }
            });
        }
        match atom_problem {
            Some(problem) => Err(fail(problem)),
            None => Ok(()),
        }
    }
}

#[derive(Deserialize)]
struct ModelFile {
    functions: Vec<UtilityFunction>,
    ut: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    #[allow(dead_code)]
    notes: Option<String>,
}

/// The weighted utility functions of a managed system plus the utility
/// threshold `ut` and the approach margin `epsilon` used by the monitoring
/// predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityModel {
    functions: Vec<UtilityFunction>,
    ut: f64,
    epsilon: f64,
}

impl UtilityModel {
    pub fn new(
        functions: Vec<UtilityFunction>,
        ut: f64,
        epsilon: f64,
    ) -> Result<Self, UtilityError> {
        if functions.is_empty() {
            return Err(UtilityError::NoFunctions);
        }
        let mut seen = BTreeSet::new();
        for f in &functions {
            if !seen.insert(f.name.clone()) {
                return Err(UtilityError::DuplicateFunction(f.name.clone()));
            }
        }
        if !(ut > 0.0 && ut < 1.0) {
            return Err(UtilityError::ThresholdOutOfRange(ut));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(UtilityError::MarginOutOfRange(epsilon));
        }
        Ok(UtilityModel {
            functions,
            ut,
            epsilon,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self, UtilityError> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| UtilityError::Parse(e.to_string()))?;
        UtilityModel::new(file.functions, file.ut, file.epsilon)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, UtilityError> {
        let text = std::fs::read_to_string(path).map_err(|e| UtilityError::Io(e.to_string()))?;
        UtilityModel::from_json_str(&text)
    }

    /// Same model with the threshold and margin replaced where given.
    pub fn with_thresholds(
        self,
        ut: Option<f64>,
        epsilon: Option<f64>,
    ) -> Result<Self, UtilityError> {
        UtilityModel::new(
            self.functions,
            ut.unwrap_or(self.ut),
            epsilon.unwrap_or(self.epsilon),
        )
    }

    pub fn functions(&self) -> &[UtilityFunction] {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&UtilityFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn ut(&self) -> f64 {
        self.ut
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Cross-checks every function against the schema: involved attributes
    /// exist, atoms stay inside the involved set, atom values are domain
    /// members.
    pub fn validate_against(&self, schema: &SystemSchema) -> Result<(), UtilityError> {
        for f in &self.functions {
            f.validate(schema)?;
        }
        Ok(())
    }

    /// Weighted geometric mean of all function values on a fully-known
    /// state. Computed in the log domain so large models cannot underflow;
    /// an exact zero anywhere forces the result to zero.
    pub fn overall_utility(&self, state: &SystemState) -> Result<f64, UtilityError> {
        let mut values = Vec::with_capacity(self.functions.len());
        for f in &self.functions {
            values.push((f.eval(state)?, f.weight));
        }
        if values.iter().any(|&(u, _)| u == 0.0) {
            return Ok(0.0);
        }
        let weight_sum: f64 = values.iter().map(|&(_, w)| w).sum();
        let log_mean: f64 = values
            .iter()
            .map(|&(u, w)| w * u.ln())
            .sum::<f64>()
            / weight_sum;
        Ok(log_mean.exp().clamp(0.0, 1.0))
    }

    /// Monitoring predicate: the state needs adaptation when its overall
    /// utility reaches the threshold or comes within `epsilon` of it.
    pub fn needs_adaptation(&self, state: &SystemState) -> Result<bool, UtilityError> {
        Ok(self.overall_utility(state)? <= self.ut + self.epsilon)
    }

    /// Classifies the adaptable attributes of a fully-known request state.
    ///
    /// For every function currently below the threshold, an adaptable
    /// involved attribute whose single reassignment can lift that function
    /// back to the threshold is a breaker. If no single reassignment of any
    /// adaptable involved attribute suffices, all of them are flagged so the
    /// constructive search has variables to move. Unadaptable attributes
    /// that would qualify are reported separately; they can never be
    /// altered. Remaining adaptable attributes whose reassignment would
    /// strictly raise some function are antagonists.
    pub fn analyze_request(
        &self,
        state: &SystemState,
        schema: &SystemSchema,
    ) -> Result<RequestAnalysis, UtilityError> {
        let mut breakers = BTreeSet::new();
        let mut unadaptable_participants = BTreeSet::new();

        for f in &self.functions {
            if f.eval(state)? >= self.ut {
                continue;
            }
            let mut adaptable_involved = Vec::new();
            let mut restored_any = false;
            for name in &f.involved {
                let attr = schema
                    .attribute(name)
                    .ok_or_else(|| UtilityError::MissingAttribute(name.clone()))?;
                let current = state
                    .known(name)
                    .ok_or_else(|| UtilityError::UncertainInput(name.clone()))?
                    .to_string();
                let mut restores = false;
                for alternative in attr.domain() {
                    if *alternative == current {
                        continue;
                    }
                    let candidate =
                        state.with_value(name, AttributeValue::known(alternative.clone()));
                    if f.eval(&candidate)? >= self.ut {
                        restores = true;
                        break;
                    }
                }
                if attr.adaptable() {
                    adaptable_involved.push(name.clone());
                    if restores {
                        breakers.insert(name.clone());
                        restored_any = true;
                    }
                } else if restores {
                    unadaptable_participants.insert(name.clone());
                }
            }
            if !restored_any {
                breakers.extend(adaptable_involved);
            }
        }

        let mut antagonists = BTreeSet::new();
        for f in &self.functions {
            let current_value = f.eval(state)?;
            for name in &f.involved {
                if breakers.contains(name) || antagonists.contains(name) {
                    continue;
                }
                let attr = schema
                    .attribute(name)
                    .ok_or_else(|| UtilityError::MissingAttribute(name.clone()))?;
                if !attr.adaptable() {
                    continue;
                }
                let current = state.known(name).expect("checked above").to_string();
                for alternative in attr.domain() {
                    if *alternative == current {
                        continue;
                    }
                    let candidate =
                        state.with_value(name, AttributeValue::known(alternative.clone()));
                    if f.eval(&candidate)? > current_value {
                        antagonists.insert(name.clone());
                        break;
                    }
                }
            }
        }

        Ok(RequestAnalysis {
            breakers,
            antagonists,
            unadaptable_participants,
        })
    }
}

/// Outcome of analysing an adaptation request. Breakers and antagonists are
/// disjoint subsets of the adaptable attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RequestAnalysis {
    pub breakers: BTreeSet<String>,
    pub antagonists: BTreeSet<String>,
    /// Unadaptable attributes that participate in a threshold violation.
    /// Informational only: the engine cannot move them.
    pub unadaptable_participants: BTreeSet<String>,
}
