//! Run-time states of the managed system and the cases stored from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A single attribute reading. `Uncertain` models a sensor dropout or any
/// other knowledge shortage at monitoring time; it serialises as JSON `null`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Option<String>", into = "Option<String>")]
pub enum AttributeValue {
    Known(String),
    Uncertain,
}

impl AttributeValue {
    pub fn known(value: impl Into<String>) -> Self {
        AttributeValue::Known(value.into())
    }

    pub fn as_known(&self) -> Option<&str> {
        match self {
            AttributeValue::Known(v) => Some(v),
            AttributeValue::Uncertain => None,
        }
    }

    pub fn is_uncertain(&self) -> bool {
        matches!(self, AttributeValue::Uncertain)
    }
}

impl From<Option<String>> for AttributeValue {
    fn from(value: Option<String>) -> Self {
        match value {
            Some(v) => AttributeValue::Known(v),
            None => AttributeValue::Uncertain,
        }
    }
}

impl From<AttributeValue> for Option<String> {
    fn from(value: AttributeValue) -> Self {
        match value {
            AttributeValue::Known(v) => Some(v),
            AttributeValue::Uncertain => None,
        }
    }
}

/// An assignment of a value (possibly `Uncertain`) to every attribute of a
/// schema. Completeness and domain membership are checked by
/// [`SystemSchema::validate_state`](crate::schema::SystemSchema::validate_state),
/// not by construction, so a `SystemState` can be built incrementally.
///
/// States are plain immutable values once built; they can be shared and sent
/// across threads freely.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemState {
    values: BTreeMap<String, AttributeValue>,
}

impl SystemState {
    pub fn new() -> Self {
        SystemState::default()
    }

    pub fn from_entries<I, K>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, AttributeValue)>,
        K: Into<String>,
    {
        SystemState {
            values: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// Convenience constructor for fully-known states.
    pub fn from_known<I, K, V>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        SystemState {
            values: entries
                .into_iter()
                .map(|(k, v)| (k.into(), AttributeValue::Known(v.into())))
                .collect(),
        }
    }

    pub fn get(&self, attribute: &str) -> Option<&AttributeValue> {
        self.values.get(attribute)
    }

    /// The known value of an attribute, or `None` if absent or uncertain.
    pub fn known(&self, attribute: &str) -> Option<&str> {
        self.values.get(attribute).and_then(AttributeValue::as_known)
    }

    pub fn set(&mut self, attribute: impl Into<String>, value: AttributeValue) {
        self.values.insert(attribute.into(), value);
    }

    /// A copy of this state with one attribute reassigned.
    pub fn with_value(&self, attribute: &str, value: AttributeValue) -> Self {
        let mut copy = self.clone();
        copy.set(attribute, value);
        copy
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AttributeValue)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_fully_known(&self) -> bool {
        self.values.values().all(|v| !v.is_uncertain())
    }

    /// Number of attributes whose value is currently uncertain.
    pub fn count_uncertain(&self) -> usize {
        self.values.values().filter(|v| v.is_uncertain()).count()
    }

    pub fn uncertain_attributes(&self) -> Vec<&str> {
        self.values
            .iter()
            .filter(|(_, v)| v.is_uncertain())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Validation failures of a state against a schema.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("missing attribute `{0}`")]
    MissingAttribute(String),
    #[error("value `{value}` is not in the domain of attribute `{attribute}`")]
    ValueNotInDomain { attribute: String, value: String },
}

/// Where a stored case came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseOrigin {
    Seeded,
    Generated,
}

/// Construction failures for [`Case`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaseError {
    #[error("case state has uncertain attribute `{0}`")]
    UncertainValue(String),
    #[error("case utility {0} is outside [0, 1]")]
    UtilityOutOfRange(f64),
}

/// A fully-known state with its cached utility, as stored in the knowledge
/// base. Construction rejects uncertain values and out-of-range utilities,
/// so a `Case` in hand is always well-formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    id: String,
    state: SystemState,
    utility: f64,
    origin: CaseOrigin,
}

impl Case {
    pub fn new(
        id: impl Into<String>,
        state: SystemState,
        utility: f64,
        origin: CaseOrigin,
    ) -> Result<Self, CaseError> {
        if let Some(attr) = state.iter().find(|(_, v)| v.is_uncertain()) {
            return Err(CaseError::UncertainValue(attr.0.to_string()));
        }
        if !(0.0..=1.0).contains(&utility) || !utility.is_finite() {
            return Err(CaseError::UtilityOutOfRange(utility));
        }
        Ok(Case {
            id: id.into(),
            state,
            utility,
            origin,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn utility(&self) -> f64 {
        self.utility
    }

    pub fn origin(&self) -> CaseOrigin {
        self.origin
    }
}
