//! Knowledge base storage, retrieval framing, usefulness scoring, and
//! quality-gated retention.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::schema::SystemSchema;
use crate::similarity::{case_similarity, RequestCase};
use crate::state::{Case, CaseOrigin, SystemState};
use crate::utility::UtilityModel;

/// Which usefulness formula ranks retrieved cases.
///
/// `Paper` is `1 - (1 - sim) * utility`: at fixed similarity below one it
/// *decreases* as the stored utility grows. `Complement` is
/// `1 - (1 - sim) * (1 - utility)`, which rewards both similarity and
/// utility. Both are kept so experiments can compare them; `Paper` is the
/// default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsefulnessVariant {
    #[default]
    Paper,
    Complement,
}

/// Combined retrieval score of a case given its similarity to the request
/// and its stored utility.
pub fn usefulness(similarity: f64, utility: f64, variant: UsefulnessVariant) -> f64 {
    match variant {
        UsefulnessVariant::Paper => 1.0 - (1.0 - similarity) * utility,
        UsefulnessVariant::Complement => 1.0 - (1.0 - similarity) * (1.0 - utility),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KnowledgeError {
    #[error("cannot select from an empty adaptation frame")]
    EmptyQaf,
}

/// One retrieved candidate with its similarity and usefulness. Entries own a
/// snapshot of the case, so a later retention never mutates a frame already
/// handed out.
#[derive(Debug, Clone, PartialEq)]
pub struct QafEntry {
    pub case: Case,
    pub similarity: f64,
    pub usefulness: f64,
}

/// The qualified adaptation frame: every stored case whose similarity to the
/// request case clears the floor `beta` and which agrees with the request on
/// all unadaptable attributes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qaf {
    pub entries: Vec<QafEntry>,
}

impl Qaf {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// In-memory case store bound to one schema by fingerprint. Retrieval scans
/// the whole store; at the state-space sizes this engine targets a linear
/// scan is exact and fast enough.
///
/// Mutation requires `&mut self` while retrieval borrows `&self`, so the
/// single-writer / multi-reader contract is enforced by the borrow checker:
/// an in-flight frame can never observe a concurrent retention.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    schema_fingerprint: String,
    cases: Vec<Case>,
}

/// Outcome of a retention attempt. Rejections are ordinary outcomes, not
/// errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetainOutcome {
    Retained,
    BelowThreshold,
    Duplicate,
}

impl KnowledgeBase {
    pub fn for_schema(schema: &SystemSchema) -> Self {
        KnowledgeBase {
            schema_fingerprint: schema.fingerprint(),
            cases: Vec::new(),
        }
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn contains_state(&self, state: &SystemState) -> bool {
        self.cases.iter().any(|c| c.state() == state)
    }

    /// Appends a case when its utility strictly exceeds the threshold and no
    /// stored case has the identical full state.
    pub fn retain(&mut self, case: Case, model: &UtilityModel) -> RetainOutcome {
        if case.utility() <= model.ut() {
            return RetainOutcome::BelowThreshold;
        }
        if self.contains_state(case.state()) {
            return RetainOutcome::Duplicate;
        }
        self.cases.push(case);
        RetainOutcome::Retained
    }
}

/// Retrieves every stored case that (a) agrees exactly with the request on
/// all unadaptable attributes carrying a known request value (a response
/// cannot alter those, so disagreement would make the case unexecutable)
/// and (b) has similarity within `[beta, 1]` over the included attributes.
///
/// An empty inclusion set qualifies nothing: similarity is undefined there,
/// so retrieval simply yields an empty frame and the caller falls back to
/// constructive search.
pub fn build_qaf(
    request_case: &RequestCase,
    request_full: &SystemState,
    kb: &KnowledgeBase,
    schema: &SystemSchema,
    beta: f64,
    included: &BTreeSet<String>,
    variant: UsefulnessVariant,
) -> Qaf {
    let mut entries = Vec::new();
    if included.is_empty() {
        return Qaf { entries };
    }
    for case in kb.cases() {
        let agrees = schema
            .attributes()
            .iter()
            .filter(|a| !a.adaptable())
            .all(|a| match request_full.known(a.name()) {
                Some(v) => case.state().known(a.name()) == Some(v),
                None => true,
            });
        if !agrees {
            continue;
        }
        let similarity = case_similarity(request_case, case, schema, included)
            .expect("knowledge base cases and request case cover the included attributes");
        if similarity >= beta {
            entries.push(QafEntry {
                similarity,
                usefulness: usefulness(similarity, case.utility(), variant),
                case: case.clone(),
            });
        }
    }
    Qaf { entries }
}

/// Picks the frame entry with the highest usefulness. Ties fall to the
/// higher stored utility, then to the lexicographically smallest case id so
/// selection is deterministic under any entry order.
pub fn select_best(qaf: &Qaf) -> Result<&QafEntry, KnowledgeError> {
    let mut best: Option<&QafEntry> = None;
    for entry in &qaf.entries {
        best = Some(match best {
            None => entry,
            Some(current) => {
                if entry.usefulness > current.usefulness
                    || (entry.usefulness == current.usefulness
                        && (entry.case.utility() > current.case.utility()
                            || (entry.case.utility() == current.case.utility()
                                && entry.case.id() < current.case.id())))
                {
                    entry
                } else {
                    current
                }
            }
        });
    }
    best.ok_or(KnowledgeError::EmptyQaf)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KbError {
    #[error("failed to read knowledge base file: {0}")]
    Io(String),
    #[error("failed to parse knowledge base file: {0}")]
    Parse(String),
    #[error("knowledge base was built for schema {found}, expected {expected}")]
    SchemaMismatch { expected: String, found: String },
    #[error("failed to write knowledge base file: {0}")]
    Write(String),
}

/// Raw on-disk shape of a case, before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub state: SystemState,
    pub utility: f64,
    pub origin: CaseOrigin,
}

#[derive(Serialize, Deserialize)]
struct KbFile {
    schema_fingerprint: String,
    cases: Vec<CaseRecord>,
}

/// Why a stored case was refused at load time.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum QuarantineReason {
    InvalidState(String),
    UncertainValue(String),
    UtilityOutOfRange(f64),
    BelowThreshold(f64),
    DuplicateState(String),
}

impl std::fmt::Display for QuarantineReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuarantineReason::InvalidState(detail) => write!(f, "invalid state: {detail}"),
            QuarantineReason::UncertainValue(attr) => {
                write!(f, "uncertain value for `{attr}`")
            }
            QuarantineReason::UtilityOutOfRange(u) => {
                write!(f, "utility {u} outside [0, 1]")
            }
            QuarantineReason::BelowThreshold(u) => {
                write!(f, "utility {u} does not exceed the threshold")
            }
            QuarantineReason::DuplicateState(other) => {
                write!(f, "state duplicates case `{other}`")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuarantinedCase {
    pub record: CaseRecord,
    pub reason: QuarantineReason,
}

/// Result of loading a knowledge base: the accepted cases plus every
/// offending record, reported rather than silently dropped.
#[derive(Debug, Clone)]
pub struct KbLoadReport {
    pub kb: KnowledgeBase,
    pub quarantined: Vec<QuarantinedCase>,
}

pub fn load_kb(
    path: impl AsRef<Path>,
    schema: &SystemSchema,
    model: &UtilityModel,
) -> Result<KbLoadReport, KbError> {
    let text = std::fs::read_to_string(path).map_err(|e| KbError::Io(e.to_string()))?;
    load_kb_from_str(&text, schema, model)
}

pub fn load_kb_from_str(
    json: &str,
    schema: &SystemSchema,
    model: &UtilityModel,
) -> Result<KbLoadReport, KbError> {
    let file: KbFile = serde_json::from_str(json).map_err(|e| KbError::Parse(e.to_string()))?;
    let expected = schema.fingerprint();
    if file.schema_fingerprint != expected {
        return Err(KbError::SchemaMismatch {
            expected,
            found: file.schema_fingerprint,
        });
    }
    let mut kb = KnowledgeBase::for_schema(schema);
    let mut quarantined = Vec::new();
    for record in file.cases {
        let reason = validate_record(&record, schema, model, &kb);
        match reason {
            Some(reason) => quarantined.push(QuarantinedCase { record, reason }),
            None => {
                let case = Case::new(
                    record.id.clone(),
                    record.state.clone(),
                    record.utility,
                    record.origin,
                )
                .expect("record was just validated");
                kb.cases.push(case);
            }
        }
    }
    Ok(KbLoadReport { kb, quarantined })
}

fn validate_record(
    record: &CaseRecord,
    schema: &SystemSchema,
    model: &UtilityModel,
    kb: &KnowledgeBase,
) -> Option<QuarantineReason> {
    if let Err(e) = schema.validate_state(&record.state) {
        return Some(QuarantineReason::InvalidState(e.to_string()));
    }
    if let Some(attr) = record.state.uncertain_attributes().first() {
        return Some(QuarantineReason::UncertainValue(attr.to_string()));
    }
    if !(0.0..=1.0).contains(&record.utility) || !record.utility.is_finite() {
        return Some(QuarantineReason::UtilityOutOfRange(record.utility));
    }
    if record.utility <= model.ut() {
        return Some(QuarantineReason::BelowThreshold(record.utility));
    }
    if let Some(existing) = kb.cases.iter().find(|c| c.state() == &record.state) {
        return Some(QuarantineReason::DuplicateState(existing.id().to_string()));
    }
    None
}

pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<(), KbError> {
    let file = KbFile {
        schema_fingerprint: kb.schema_fingerprint.clone(),
        cases: kb
            .cases
            .iter()
            .map(|c| CaseRecord {
                id: c.id().to_string(),
                state: c.state().clone(),
                utility: c.utility(),
                origin: c.origin(),
            })
            .collect(),
    };
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| KbError::Write(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| KbError::Write(e.to_string()))
}
