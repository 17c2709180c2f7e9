//! The adaptation pipeline: analyse the request, retrieve a usable case,
//! otherwise search the adaptable value space, and retain what was learned.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::{EngineConfig, Heuristic};
use crate::enumerate::IndexProduct;
use crate::hash::fnv1a64;
use crate::knowledge::{build_qaf, select_best, KnowledgeBase, QafEntry, RetainOutcome};
use crate::schema::{AttributeSchema, SystemSchema};
use crate::similarity::{RequestCase, SimilarityError};
use crate::state::{AttributeValue, Case, CaseOrigin, StateError, SystemState};
use crate::uncertainty::{
    assess, concretize, decide, UncertaintyAssessment, UncertaintyError,
};
use crate::utility::{RequestAnalysis, UtilityError, UtilityModel};

/// A snapshot of the managed system's attribute values at the moment an
/// adaptation became necessary. `issued_at` is a monotonic tick used to keep
/// queued requests in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRequest {
    pub id: String,
    pub state: SystemState,
    pub issued_at: u64,
}

/// How a response was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Retrieved { case_id: String },
    GeneratedFirstFit,
    GeneratedBestFit,
}

impl Provenance {
    pub fn is_retrieved(&self) -> bool {
        matches!(self, Provenance::Retrieved { .. })
    }
}

/// The corrective state handed back to the managed system. Its utility
/// strictly exceeds the threshold, and `changed` never includes an
/// unadaptable attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationResponse {
    pub id: String,
    pub state: SystemState,
    pub utility: f64,
    pub usefulness: f64,
    pub provenance: Provenance,
    pub changed: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("no assignment of the adaptable attributes exceeds the utility threshold")]
    NoFeasibleState,
    #[error("constructive search would examine {states} states, more than the cap of {cap}")]
    EnumCapExceeded { states: u128, cap: u64 },
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("invalid request state: {0}")]
    InvalidRequest(#[from] StateError),
}

/// Builds the retrieval probe by dropping the breaker attributes from the
/// request; their values are exactly what must change, so they must not pull
/// the similarity measure. Returns the probe and the included attribute set.
pub fn formulate_request_case(
    state: &SystemState,
    breakers: &BTreeSet<String>,
    schema: &SystemSchema,
) -> Result<(RequestCase, BTreeSet<String>), SimilarityError> {
    let included: BTreeSet<String> = schema
        .attributes()
        .iter()
        .map(|a| a.name().to_string())
        .filter(|name| !breakers.contains(name))
        .collect();
    let request_case = RequestCase::from_state(state, &included)?;
    Ok((request_case, included))
}

/// Turns a selected case into an executable response: adaptable attributes
/// take the case's values, unadaptable ones keep the request's. The composed
/// state is re-scored; if it no longer clears the threshold the caller must
/// fall through to constructive search, so `None` is returned instead of a
/// sub-threshold response.
pub fn response_from_case(
    request: &AdaptationRequest,
    entry: &QafEntry,
    model: &UtilityModel,
    schema: &SystemSchema,
) -> Result<Option<AdaptationResponse>, EngineError> {
    let mut composed = request.state.clone();
    for attr in schema.attributes() {
        if attr.adaptable() {
            if let Some(value) = entry.case.state().known(attr.name()) {
                composed.set(attr.name(), AttributeValue::known(value));
            }
        }
    }
    let utility = model.overall_utility(&composed)?;
    if utility <= model.ut() {
        return Ok(None);
    }
    let changed = changed_attributes(&request.state, &composed);
    Ok(Some(AdaptationResponse {
        id: response_id(request),
        state: composed,
        utility,
        usefulness: entry.usefulness,
        provenance: Provenance::Retrieved {
            case_id: entry.case.id().to_string(),
        },
        changed,
    }))
}

fn response_id(request: &AdaptationRequest) -> String {
    format!("{}-res", request.id)
}

fn changed_attributes(before: &SystemState, after: &SystemState) -> BTreeSet<String> {
    after
        .iter()
        .filter(|(name, value)| before.get(name) != Some(value))
        .map(|(name, _)| name.to_string())
        .collect()
}

/// Deterministic id for a generated case, derived from its full state so a
/// replayed generation names the same case.
fn generated_case_id(state: &SystemState) -> String {
    let mut canonical = String::new();
    for (name, value) in state.iter() {
        canonical.push_str(name);
        canonical.push('\u{1f}');
        canonical.push_str(value.as_known().unwrap_or("\u{18}"));
        canonical.push('\u{1e}');
    }
    format!("g-{:016x}", fnv1a64(canonical.as_bytes()))
}

struct SearchSpace<'a> {
    variables: Vec<&'a AttributeSchema>,
}

impl<'a> SearchSpace<'a> {
    /// Variables in schema order; assignments enumerate each domain in
    /// order, last variable fastest.
    fn over(schema: &'a SystemSchema, names: &BTreeSet<String>) -> Self {
        SearchSpace {
            variables: schema
                .attributes()
                .iter()
                .filter(|a| names.contains(a.name()))
                .collect(),
        }
    }

    fn total(&self) -> u128 {
        let sizes: Vec<usize> = self.variables.iter().map(|a| a.domain().len()).collect();
        IndexProduct::count_total(&sizes)
    }

    fn assignments(&self) -> impl Iterator<Item = SystemStatePatch<'_>> + '_ {
        let sizes: Vec<usize> = self.variables.iter().map(|a| a.domain().len()).collect();
        IndexProduct::new(sizes).map(move |indices| SystemStatePatch {
            variables: &self.variables,
            indices,
        })
    }
}

struct SystemStatePatch<'a> {
    variables: &'a [&'a AttributeSchema],
    indices: Vec<usize>,
}

impl SystemStatePatch<'_> {
    fn apply(&self, base: &SystemState) -> SystemState {
        let mut state = base.clone();
        for (attr, &index) in self.variables.iter().zip(&self.indices) {
            state.set(attr.name(), AttributeValue::known(attr.domain()[index].clone()));
        }
        state
    }
}

/// First-fit constructive adaptation. Candidate variable sets grow from the
/// breakers alone, to breakers plus antagonists, to every adaptable
/// attribute; within each set assignments run in schema order crossed with
/// domain order, and the first composed state whose overall utility strictly
/// exceeds the threshold wins. The utility of the generated state doubles as
/// its usefulness.
pub fn first_fit(
    request: &AdaptationRequest,
    analysis: &RequestAnalysis,
    model: &UtilityModel,
    schema: &SystemSchema,
    enum_cap: u64,
) -> Result<AdaptationResponse, EngineError> {
    let mut stages: Vec<BTreeSet<String>> = Vec::new();
    let breakers = analysis.breakers.clone();
    let with_antagonists: BTreeSet<String> = breakers
        .union(&analysis.antagonists)
        .cloned()
        .collect();
    let all_adaptable: BTreeSet<String> = schema
        .adaptable_attributes()
        .map(|a| a.name().to_string())
        .collect();
    for stage in [breakers, with_antagonists, all_adaptable] {
        if stages.last() != Some(&stage) {
            stages.push(stage);
        }
    }

    let mut examined: u128 = 0;
    for stage in &stages {
        let space = SearchSpace::over(schema, stage);
        examined = examined.saturating_add(space.total());
        if examined > u128::from(enum_cap) {
            return Err(EngineError::EnumCapExceeded {
                states: examined,
                cap: enum_cap,
            });
        }
        for patch in space.assignments() {
            let candidate = patch.apply(&request.state);
            let utility = model.overall_utility(&candidate)?;
            if utility > model.ut() {
                let changed = changed_attributes(&request.state, &candidate);
                return Ok(AdaptationResponse {
                    id: response_id(request),
                    state: candidate,
                    utility,
                    usefulness: utility,
                    provenance: Provenance::GeneratedFirstFit,
                    changed,
                });
            }
        }
    }
    Err(EngineError::NoFeasibleState)
}

/// Best-fit constructive adaptation: exhaustive search over every adaptable
/// assignment (unadaptable attributes stay at the request's values) for the
/// maximum overall utility above the threshold. Ties prefer fewer changed
/// attributes, then the earlier assignment in enumeration order.
pub fn best_fit(
    request: &AdaptationRequest,
    model: &UtilityModel,
    schema: &SystemSchema,
    enum_cap: u64,
) -> Result<AdaptationResponse, EngineError> {
    let all_adaptable: BTreeSet<String> = schema
        .adaptable_attributes()
        .map(|a| a.name().to_string())
        .collect();
    let space = SearchSpace::over(schema, &all_adaptable);
    let total = space.total();
    if total > u128::from(enum_cap) {
        return Err(EngineError::EnumCapExceeded {
            states: total,
            cap: enum_cap,
        });
    }

    let mut best: Option<(f64, usize, SystemState)> = None;
    for patch in space.assignments() {
        let candidate = patch.apply(&request.state);
        let utility = model.overall_utility(&candidate)?;
        if utility <= model.ut() {
            continue;
        }
        let changed_count = changed_attributes(&request.state, &candidate).len();
        let replace = match &best {
            None => true,
            Some((best_utility, best_changed, _)) => {
                utility > *best_utility
                    || (utility == *best_utility && changed_count < *best_changed)
            }
        };
        if replace {
            best = Some((utility, changed_count, candidate));
        }
    }

    match best {
        Some((utility, _, state)) => {
            let changed = changed_attributes(&request.state, &state);
            Ok(AdaptationResponse {
                id: response_id(request),
                state,
                utility,
                usefulness: utility,
                provenance: Provenance::GeneratedBestFit,
                changed,
            })
        }
        None => Err(EngineError::NoFeasibleState),
    }
}

/// Runs the full adaptation pipeline on a fully-known request.
///
/// The request is analysed, the retrieval probe is built without the breaker
/// attributes (plus any forced free variables), and the knowledge base is
/// framed. A retrieved case whose composed state still clears the threshold
/// becomes the response as-is; otherwise the configured constructive search
/// generates one, and only generated responses are retained for future
/// reuse.
pub fn adapt(
    request: &AdaptationRequest,
    kb: &mut KnowledgeBase,
    model: &UtilityModel,
    schema: &SystemSchema,
    config: &EngineConfig,
    forced_breakers: &BTreeSet<String>,
) -> Result<AdaptationResponse, EngineError> {
    schema.validate_state(&request.state)?;
    let mut analysis = model.analyze_request(&request.state, schema)?;
    for name in forced_breakers {
        if schema.attribute(name).is_some_and(|a| a.adaptable()) {
            analysis.breakers.insert(name.clone());
        }
    }
    analysis.antagonists = analysis
        .antagonists
        .difference(&analysis.breakers)
        .cloned()
        .collect();

    let (request_case, included) =
        formulate_request_case(&request.state, &analysis.breakers, schema)?;
    let qaf = build_qaf(
        &request_case,
        &request.state,
        kb,
        schema,
        config.beta,
        &included,
        config.usefulness_variant,
    );
    if !qaf.is_empty() {
        let entry = select_best(&qaf).expect("frame is non-empty");
        if let Some(response) = response_from_case(request, entry, model, schema)? {
            return Ok(response);
        }
    }

    let response = match config.heuristic {
        Heuristic::FirstFit => first_fit(request, &analysis, model, schema, config.enum_cap)?,
        Heuristic::BestFit => best_fit(request, model, schema, config.enum_cap)?,
    };
    let case = Case::new(
        generated_case_id(&response.state),
        response.state.clone(),
        response.utility,
        CaseOrigin::Generated,
    )
    .expect("generated responses are fully known with utility in range");
    let outcome = kb.retain(case, model);
    debug_assert_ne!(outcome, RetainOutcome::BelowThreshold);
    Ok(response)
}

/// The engine facade: one schema, one effective utility model, one
/// configuration, and the knowledge base they govern.
///
/// `adapt` takes `&mut self`, so the borrow checker serialises the pipeline;
/// callers queue requests by calling in `issued_at` order.
#[derive(Debug, Clone)]
pub struct AdaptationEngine {
    schema: SystemSchema,
    model: UtilityModel,
    config: EngineConfig,
    kb: KnowledgeBase,
}

impl AdaptationEngine {
    /// Wires up the stack, applying the config's threshold overrides to the
    /// model and cross-validating everything.
    pub fn new(
        schema: SystemSchema,
        model: UtilityModel,
        config: EngineConfig,
        kb: KnowledgeBase,
    ) -> Result<Self, EngineBuildError> {
        config.validate().map_err(EngineBuildError::Config)?;
        let model = model
            .with_thresholds(config.ut, config.epsilon)
            .map_err(EngineBuildError::Model)?;
        model
            .validate_against(&schema)
            .map_err(EngineBuildError::Model)?;
        if kb.schema_fingerprint() != schema.fingerprint() {
            return Err(EngineBuildError::KbSchemaMismatch {
                expected: schema.fingerprint(),
                found: kb.schema_fingerprint().to_string(),
            });
        }
        Ok(AdaptationEngine {
            schema,
            model,
            config,
            kb,
        })
    }

    pub fn schema(&self) -> &SystemSchema {
        &self.schema
    }

    /// The effective model, with any config overrides already applied.
    pub fn model(&self) -> &UtilityModel {
        &self.model
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn needs_adaptation(&self, state: &SystemState) -> Result<bool, UtilityError> {
        self.model.needs_adaptation(state)
    }

    pub fn assess(&self, state: &SystemState) -> Result<UncertaintyAssessment, UncertaintyError> {
        assess(state, &self.model, &self.schema, self.config.kappa_cap)
    }

    pub fn decide(&self, assessment: &UncertaintyAssessment) -> bool {
        decide(assessment, self.config.paradigm, self.config.alpha_threshold)
    }

    pub fn concretize(
        &self,
        request: &AdaptationRequest,
    ) -> Result<(AdaptationRequest, BTreeSet<String>), UncertaintyError> {
        concretize(request, &self.model, &self.schema, self.config.kappa_cap)
    }

    /// Adapts a fully-known request.
    pub fn adapt(
        &mut self,
        request: &AdaptationRequest,
    ) -> Result<AdaptationResponse, EngineError> {
        self.adapt_with_free(request, &BTreeSet::new())
    }

    /// Adapts a fully-known request whose `free` attributes were pinned by
    /// concretization and must be treated as breakers.
    pub fn adapt_with_free(
        &mut self,
        request: &AdaptationRequest,
        free: &BTreeSet<String>,
    ) -> Result<AdaptationResponse, EngineError> {
        adapt(
            request,
            &mut self.kb,
            &self.model,
            &self.schema,
            &self.config,
            free,
        )
    }

    /// Full uncertainty-aware pipeline for a single observed state: assess
    /// and gate uncertain states, concretize when adaptation is issued, and
    /// adapt. Returns the assessment alongside the outcome.
    pub fn handle_state(
        &mut self,
        request: &AdaptationRequest,
    ) -> Result<HandleOutcome, EngineError> {
        if request.state.is_fully_known() {
            if !self.needs_adaptation(&request.state)? {
                return Ok(HandleOutcome::Healthy);
            }
            return Ok(HandleOutcome::Adapted {
                assessment: None,
                response: self.adapt(request)?,
            });
        }
        let assessment = self.assess(&request.state)?;
        if !self.decide(&assessment) {
            return Ok(HandleOutcome::Withheld { assessment });
        }
        let (concretized, free) = self.concretize(request)?;
        let response = self.adapt_with_free(&concretized, &free)?;
        Ok(HandleOutcome::Adapted {
            assessment: Some(assessment),
            response,
        })
    }
}

/// What handling one observed state produced.
#[derive(Debug, Clone, PartialEq)]
pub enum HandleOutcome {
    /// Fully known and above the monitoring band; nothing to do.
    Healthy,
    /// Uncertain, and the paradigm decided against issuing an adaptation.
    Withheld { assessment: UncertaintyAssessment },
    Adapted {
        assessment: Option<UncertaintyAssessment>,
        response: AdaptationResponse,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineBuildError {
    #[error("invalid config: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("invalid utility model: {0}")]
    Model(#[from] UtilityError),
    #[error("knowledge base was built for schema {found}, expected {expected}")]
    KbSchemaMismatch { expected: String, found: String },
}
