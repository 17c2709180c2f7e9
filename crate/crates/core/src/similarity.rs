//! Weighted similarity between a request case and stored cases.

use std::collections::{BTreeMap, BTreeSet};

use crate::schema::{AttributeKind, AttributeSchema, SystemSchema};
use crate::state::{Case, StateError, SystemState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("similarity is undefined over an empty inclusion set")]
    EmptyInclusionSet,
    #[error("request case has no known value for included attribute `{0}`")]
    MissingRequestValue(String),
    #[error("case `{case}` has no value for included attribute `{attribute}`")]
    MissingCaseValue { case: String, attribute: String },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Per-attribute similarity in `[0, 1]`. Nominal attributes match exactly or
/// not at all; ordinal attributes shrink linearly with rank distance.
pub fn local_similarity(
    attr: &AttributeSchema,
    a: &str,
    b: &str,
) -> Result<f64, SimilarityError> {
    let rank_a = attr.rank_of(a).ok_or_else(|| StateError::ValueNotInDomain {
        attribute: attr.name().to_string(),
        value: a.to_string(),
    })?;
    let rank_b = attr.rank_of(b).ok_or_else(|| StateError::ValueNotInDomain {
        attribute: attr.name().to_string(),
        value: b.to_string(),
    })?;
    Ok(match attr.kind() {
        AttributeKind::Nominal => {
            if rank_a == rank_b {
                1.0
            } else {
                0.0
            }
        }
        AttributeKind::Ordinal => {
            let span = attr.domain().len() - 1;
            if span == 0 {
                1.0
            } else {
                1.0 - rank_a.abs_diff(rank_b) as f64 / span as f64
            }
        }
    })
}

/// The retrieval probe: the known values of an adaptation request restricted
/// to the attributes included in the similarity measure (everything except
/// the breakers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestCase {
    values: BTreeMap<String, String>,
}

impl RequestCase {
    /// Projects a state onto the included attributes. Every included
    /// attribute must carry a known value.
    pub fn from_state(
        state: &SystemState,
        included: &BTreeSet<String>,
    ) -> Result<Self, SimilarityError> {
        let mut values = BTreeMap::new();
        for name in included {
            let value = state
                .known(name)
                .ok_or_else(|| SimilarityError::MissingRequestValue(name.clone()))?;
            values.insert(name.clone(), value.to_string());
        }
        Ok(RequestCase { values })
    }

    pub fn get(&self, attribute: &str) -> Option<&str> {
        self.values.get(attribute).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Weighted average of local similarities over the included attributes,
/// normalised by the included weights only. Excluding an attribute therefore
/// renormalises the rest automatically.
pub fn case_similarity(
    request: &RequestCase,
    case: &Case,
    schema: &SystemSchema,
    included: &BTreeSet<String>,
) -> Result<f64, SimilarityError> {
    if included.is_empty() {
        return Err(SimilarityError::EmptyInclusionSet);
    }
    let mut weighted_sum = 0.0;
    let mut weight_sum = 0.0;
    for name in included {
        let attr = schema
            .attribute(name)
            .ok_or_else(|| StateError::UnknownAttribute(name.clone()))?;
        let request_value = request
            .get(name)
            .ok_or_else(|| SimilarityError::MissingRequestValue(name.clone()))?;
        let case_value =
            case.state()
                .known(name)
                .ok_or_else(|| SimilarityError::MissingCaseValue {
                    case: case.id().to_string(),
                    attribute: name.clone(),
                })?;
        weighted_sum += attr.weight() * local_similarity(attr, request_value, case_value)?;
        weight_sum += attr.weight();
    }
    Ok(weighted_sum / weight_sum)
}
