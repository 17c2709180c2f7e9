//! Attribute schemas: the adaptation-concerned attributes of a managed
//! system, their finite domains, adaptability flags, and weights.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;
use crate::state::{AttributeValue, StateError, SystemState};

/// How values of an attribute relate to each other. Ordinal attributes use
/// their domain order as rank order; nominal attributes have no order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Nominal,
    Ordinal,
}

/// One managed-system attribute: a finite, ordered domain of symbolic
/// values, a kind, an adaptability flag, and an importance weight used by
/// the similarity measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    name: String,
    domain: Vec<String>,
    kind: AttributeKind,
    adaptable: bool,
    weight: f64,
}

impl AttributeSchema {
    pub fn new(
        name: impl Into<String>,
        domain: Vec<String>,
        kind: AttributeKind,
        adaptable: bool,
        weight: f64,
    ) -> Self {
        AttributeSchema {
            name: name.into(),
            domain,
            kind,
            adaptable,
            weight,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn kind(&self) -> AttributeKind {
        self.kind
    }

    pub fn adaptable(&self) -> bool {
        self.adaptable
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Position of a value in the domain, which doubles as its rank for
    /// ordinal attributes.
    pub fn rank_of(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }

    pub fn contains(&self, value: &str) -> bool {
        self.rank_of(value).is_some()
    }
}

/// Schema construction failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("attribute `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("attribute `{attribute}` lists value `{value}` more than once")]
    DuplicateDomainValue { attribute: String, value: String },
    #[error("attribute `{attribute}` has non-positive weight {weight}")]
    NonPositiveWeight { attribute: String, weight: f64 },
    #[error("attribute `{0}` is declared more than once")]
    DuplicateAttribute(String),
    #[error("schema has no adaptable attribute")]
    NoAdaptableAttribute,
    #[error("schema has no attributes")]
    Empty,
    #[error("failed to read schema file: {0}")]
    Io(String),
    #[error("failed to parse schema file: {0}")]
    Parse(String),
}

#[derive(Deserialize)]
struct SchemaFile {
    attributes: Vec<AttributeSchema>,
    #[serde(default)]
    #[allow(dead_code)]
    notes: Option<String>,
}

/// The full attribute sheet of a managed system. Attribute order is
/// significant: it fixes enumeration and search order throughout the engine.
///
/// Immutable after construction; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSchema {
    attributes: Vec<AttributeSchema>,
    index: BTreeMap<String, usize>,
}

impl SystemSchema {
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self, SchemaError> {
        if attributes.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut index = BTreeMap::new();
        for (pos, attr) in attributes.iter().enumerate() {
            if attr.domain.is_empty() {
                return Err(SchemaError::EmptyDomain(attr.name.clone()));
            }
            for (i, value) in attr.domain.iter().enumerate() {
                if attr.domain[..i].contains(value) {
                    return Err(SchemaError::DuplicateDomainValue {
                        attribute: attr.name.clone(),
                        value: value.clone(),
                    });
                }
            }
            if !attr.weight.is_finite() || attr.weight <= 0.0 {
                return Err(SchemaError::NonPositiveWeight {
                    attribute: attr.name.clone(),
                    weight: attr.weight,
                });
            }
            if index.insert(attr.name.clone(), pos).is_some() {
                return Err(SchemaError::DuplicateAttribute(attr.name.clone()));
            }
        }
        if !attributes.iter().any(|a| a.adaptable) {
            return Err(SchemaError::NoAdaptableAttribute);
        }
        Ok(SystemSchema { attributes, index })
    }

    pub fn from_json_str(json: &str) -> Result<Self, SchemaError> {
        let file: SchemaFile =
            serde_json::from_str(json).map_err(|e| SchemaError::Parse(e.to_string()))?;
        SystemSchema::new(file.attributes)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|e| SchemaError::Io(e.to_string()))?;
        SystemSchema::from_json_str(&text)
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSchema> {
        self.index.get(name).map(|&i| &self.attributes[i])
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn adaptable_attributes(&self) -> impl Iterator<Item = &AttributeSchema> {
        self.attributes.iter().filter(|a| a.adaptable)
    }

    /// Number of distinct fully-known states: the product of all domain
    /// sizes.
    pub fn state_space_size(&self) -> u128 {
        self.attributes
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.domain.len() as u128))
    }

    /// Content fingerprint binding knowledge bases to this schema. Covers
    /// attribute names and domains (values and order); weights, kinds and
    /// adaptability flags are tuning surfaces and deliberately excluded.
    pub fn fingerprint(&self) -> String {
        let mut canonical = String::new();
        for attr in &self.attributes {
            canonical.push_str(&attr.name);
            for value in &attr.domain {
                canonical.push('\u{1f}');
                canonical.push_str(value);
            }
            canonical.push('\u{1e}');
        }
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }

    /// Checks that a state assigns exactly one value to every schema
    /// attribute and that every known value is a domain member. Uncertain
    /// values pass; only fully-known states can be scored or stored.
    pub fn validate_state(&self, state: &SystemState) -> Result<(), StateError> {
        for (name, value) in state.iter() {
            let attr = self
                .attribute(name)
                .ok_or_else(|| StateError::UnknownAttribute(name.to_string()))?;
            if let AttributeValue::Known(v) = value {
                if !attr.contains(v) {
                    return Err(StateError::ValueNotInDomain {
                        attribute: name.to_string(),
                        value: v.clone(),
                    });
                }
            }
        }
        for attr in &self.attributes {
            if state.get(&attr.name).is_none() {
                return Err(StateError::MissingAttribute(attr.name.clone()));
            }
        }
        Ok(())
    }
}
