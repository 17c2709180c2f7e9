//! The adaptation mediator: monitors the managed system each tick, routes
//! states through the engine, and executes the responses it trusts.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::engine::{AdaptationEngine, AdaptationRequest, AdaptationResponse, EngineError};
use crate::report::{RunReport, TickRecord};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{ManagedSystem, SimulatedSystem};

/// Drives one scenario tick: apply the scheduled perturbations, read the
/// state, gate it (monitoring predicate for known states, uncertainty
/// assessment for the rest), adapt when issued, and execute the response.
/// Engine failures are recorded in the tick record; the run continues.
/// Latency is wall clock around the adapt call only.
fn tick(
    tick: u64,
    scenario: &Scenario,
    sim: &mut SimulatedSystem,
    engine: &mut AdaptationEngine,
) -> TickRecord {
    for event in scenario.events.iter().filter(|e| e.tick == tick) {
        for (attribute, value) in &event.set {
            sim.perturb(attribute, value.clone());
        }
    }
    let state = sim.read_state();
    let mut record = TickRecord {
        tick,
        uncertain: !state.is_fully_known(),
        state: state.clone(),
        assessment: None,
        issued: false,
        response: None,
        error: None,
        latency_us: 0,
        kb_size: engine.kb().len(),
    };
    let request = AdaptationRequest {
        id: format!("t{tick}"),
        state,
        issued_at: tick,
    };

    // Monitoring gate: known states through the utility predicate,
    // uncertain states through assessment and the configured paradigm.
    let issue: Result<Option<(AdaptationRequest, BTreeSet<String>)>, String> =
        if request.state.is_fully_known() {
            match engine.needs_adaptation(&request.state) {
                Ok(false) => Ok(None),
                Ok(true) => Ok(Some((request.clone(), BTreeSet::new()))),
                Err(e) => Err(e.to_string()),
            }
        } else {
            match engine.assess(&request.state) {
                Ok(assessment) => {
                    let fire = engine.decide(&assessment);
                    record.assessment = Some(assessment);
                    if fire {
                        engine
                            .concretize(&request)
                            .map(Some)
                            .map_err(|e| e.to_string())
                    } else {
                        Ok(None)
                    }
                }
                Err(e) => Err(e.to_string()),
            }
        };

    match issue {
        Err(e) => record.error = Some(e),
        Ok(None) => {}
        Ok(Some((concretized, free))) => {
            record.issued = true;
            let started = Instant::now();
            let outcome: Result<AdaptationResponse, EngineError> =
                engine.adapt_with_free(&concretized, &free);
            record.latency_us = started.elapsed().as_micros().min(u128::from(u64::MAX)) as u64;
            match outcome {
                Ok(response) => {
                    // The executed response must clear the threshold; the
                    // engine guarantees it, and the boundary re-checks
                    // before applying.
                    if response.utility > engine.model().ut() {
                        sim.apply(&response);
                        record.response = Some(response);
                    } else {
                        record.error = Some(format!(
                            "response utility {} does not exceed the threshold; not applied",
                            response.utility
                        ));
                    }
                }
                Err(e) => record.error = Some(e.to_string()),
            }
        }
    }
    record.kb_size = engine.kb().len();
    record
}

/// Runs a whole scenario against a fresh simulator seeded with the
/// scenario's initial state. Deterministic up to wall-clock latencies for a
/// given scenario, configuration, and starting knowledge base.
pub fn run_scenario(
    scenario: &Scenario,
    engine: &mut AdaptationEngine,
) -> Result<RunReport, ScenarioError> {
    scenario.validate(engine.schema())?;
    let mut sim = SimulatedSystem::new(scenario.initial_state.clone());
    let mut records = Vec::with_capacity(scenario.ticks as usize);
    for t in 1..=scenario.ticks {
        records.push(tick(t, scenario, &mut sim, engine));
    }
    Ok(RunReport::build(scenario.name.clone(), records))
}
