//! Utility-driven self-adaptation engine with case-based retrieval.
//!
//! The engine watches a managed system described by a finite attribute
//! schema, judges each observed state with a weighted piecewise utility
//! model, and produces corrective states either by retrieving similar past
//! cases from a knowledge base or by searching the adaptable value space
//! directly. Uncertain attribute readings are quantified and routed through
//! a configurable decision paradigm before any adaptation is issued.
//!
//! The crate is organised around the engine pipeline:
//!
//! - [`schema`] / [`state`]: attribute schemas, states, and cases
//! - [`utility`]: piecewise utility functions and request analysis
//! - [`similarity`] / [`knowledge`]: retrieval, usefulness, retention
//! - [`engine`]: the adaptation pipeline (retrieve, else generate, retain)
//! - [`uncertainty`]: quantification and concretization of uncertain states
//! - [`sim`] / [`scenario`] / [`mediator`] / [`report`]: the scenario
//!   harness that drives the engine against a simulated managed system

pub mod config;
pub mod engine;
pub mod knowledge;
pub mod mediator;
pub mod report;
pub mod scenario;
pub mod schema;
pub mod sim;
pub mod similarity;
pub mod state;
pub mod uncertainty;
pub mod utility;

mod enumerate;
mod hash;

pub use config::{EngineConfig, Heuristic};
pub use engine::{AdaptationEngine, AdaptationRequest, AdaptationResponse, EngineError, Provenance};
pub use knowledge::{
    usefulness, KnowledgeBase, KnowledgeError, Qaf, QafEntry, RetainOutcome, UsefulnessVariant,
};
pub use schema::{AttributeKind, AttributeSchema, SchemaError, SystemSchema};
pub use state::{AttributeValue, Case, CaseOrigin, StateError, SystemState};
pub use uncertainty::{Paradigm, UncertaintyAssessment, UncertaintyError};
pub use utility::{Condition, RequestAnalysis, UtilityError, UtilityFunction, UtilityModel};
