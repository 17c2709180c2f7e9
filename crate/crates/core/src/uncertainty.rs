//! Run-time uncertainty: quantifying how much an uncertain state threatens
//! the utility threshold, deciding whether to act on it, and pinning the
//! uncertain values down so the engine can plan.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::AdaptationRequest;
use crate::enumerate::IndexProduct;
use crate::schema::SystemSchema;
use crate::state::{AttributeValue, SystemState};
use crate::utility::{UtilityError, UtilityModel};

/// How the engine reacts to uncertain states: never on uncertainty alone,
/// always, or gated by the measured uncertainty level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Optimistic,
    Pessimistic,
    #[default]
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UncertaintyError {
    #[error("{candidates} possible completions exceed the cap of {cap}")]
    KappaTooLarge { candidates: u128, cap: u64 },
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

/// Quantified uncertainty of one observed state.
///
/// `candidate_count` is the number of fully-known states the observation
/// could be; `breaking_count` of them need adaptation. `breaker_probability`
/// is their ratio, `uncertain_ratio` the share of uncertain attributes, and
/// `uncertainty_level` combines the two:
/// `1 - (1 - breaker_probability) * (1 - uncertain_ratio)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyAssessment {
    pub candidate_count: u64,
    pub breaking_count: u64,
    pub breaker_probability: f64,
    pub uncertain_ratio: f64,
    pub uncertainty_level: f64,
}

/// All fully-known states the observation could be: the Cartesian product
/// over the uncertain attributes' domains with the known values fixed.
/// Deterministic order: uncertain attributes in schema order, their domains
/// in domain order, last attribute varying fastest. A fully-known state
/// yields exactly itself.
pub fn enumerate_completions(
    state: &SystemState,
    schema: &SystemSchema,
    cap: u64,
) -> Result<Vec<SystemState>, UncertaintyError> {
    let uncertain: Vec<_> = schema
        .attributes()
        .iter()
        .filter(|a| state.get(a.name()).is_some_and(AttributeValue::is_uncertain))
        .collect();
    let sizes: Vec<usize> = uncertain.iter().map(|a| a.domain().len()).collect();
    let total = IndexProduct::count_total(&sizes);
    if total > u128::from(cap) {
        return Err(UncertaintyError::KappaTooLarge {
            candidates: total,
            cap,
        });
    }
    let mut completions = Vec::with_capacity(total as usize);
    for indices in IndexProduct::new(sizes) {
        let mut completion = state.clone();
        for (attr, &index) in uncertain.iter().zip(&indices) {
            completion.set(
                attr.name(),
                AttributeValue::known(attr.domain()[index].clone()),
            );
        }
        completions.push(completion);
    }
    Ok(completions)
}

/// Measures the uncertainty of a state against the model: enumerates the
/// completions, counts those that need adaptation, and derives the combined
/// level.
pub fn assess(
    state: &SystemState,
    model: &UtilityModel,
    schema: &SystemSchema,
    cap: u64,
) -> Result<UncertaintyAssessment, UncertaintyError> {
    let completions = enumerate_completions(state, schema, cap)?;
    let mut breaking = 0u64;
    for completion in &completions {
        if model.needs_adaptation(completion)? {
            breaking += 1;
        }
    }
    let candidate_count = completions.len() as u64;
    let breaker_probability = breaking as f64 / candidate_count as f64;
    let uncertain_ratio = state.count_uncertain() as f64 / schema.len() as f64;
    Ok(UncertaintyAssessment {
        candidate_count,
        breaking_count: breaking,
        breaker_probability,
        uncertain_ratio,
        uncertainty_level: 1.0 - (1.0 - breaker_probability) * (1.0 - uncertain_ratio),
    })
}

/// Whether to issue an adaptation for an uncertain state.
///
/// Pessimistic fires on any uncertainty, optimistic never does, and hybrid
/// fires when the measured level stays at or below `alpha_threshold`, so a
/// threshold of one reproduces the pessimistic limit and zero the
/// optimistic one.
pub fn decide(
    assessment: &UncertaintyAssessment,
    paradigm: Paradigm,
    alpha_threshold: f64,
) -> bool {
    match paradigm {
        Paradigm::Pessimistic => assessment.uncertain_ratio > 0.0,
        Paradigm::Optimistic => false,
        Paradigm::Hybrid => assessment.uncertainty_level <= alpha_threshold,
    }
}

/// Pins every uncertain attribute of a request to the completion with the
/// lowest overall utility (first in enumeration order on ties), and reports
/// which of them are adaptable. Adaptable ones become free variables the
/// search must reassign; unadaptable ones stay at their worst-case value so
/// the response is robust to it. A fully-known request passes through
/// unchanged.
pub fn concretize(
    request: &AdaptationRequest,
    model: &UtilityModel,
    schema: &SystemSchema,
    cap: u64,
) -> Result<(AdaptationRequest, BTreeSet<String>), UncertaintyError> {
    if request.state.is_fully_known() {
        return Ok((request.clone(), BTreeSet::new()));
    }
    let free: BTreeSet<String> = schema
        .attributes()
        .iter()
        .filter(|a| {
            a.adaptable()
                && request
                    .state
                    .get(a.name())
                    .is_some_and(AttributeValue::is_uncertain)
        })
        .map(|a| a.name().to_string())
        .collect();

    let completions = enumerate_completions(&request.state, schema, cap)?;
    let mut worst: Option<(f64, SystemState)> = None;
    for completion in completions {
        let utility = model.overall_utility(&completion)?;
        let replace = match &worst {
            None => true,
            Some((worst_utility, _)) => utility < *worst_utility,
        };
        if replace {
            worst = Some((utility, completion));
        }
    }
    let (_, state) = worst.expect("a valid state always has at least one completion");
    Ok((
        AdaptationRequest {
            id: request.id.clone(),
            state,
            issued_at: request.issued_at,
        },
        free,
    ))
}
