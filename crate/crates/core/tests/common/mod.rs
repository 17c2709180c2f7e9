#![allow(dead_code)]

//! Shared fixtures for the integration suites: shipped robot data loaders
//! and seeded random instance generators.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use selfadapt_core::knowledge::{load_kb, KbLoadReport};
use selfadapt_core::utility::{Condition, Rule, UtilityFunction};
use selfadapt_core::{
    AdaptationEngine, AttributeKind, AttributeSchema, AttributeValue, EngineConfig,
    KnowledgeBase, SystemSchema, SystemState, UtilityModel,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn robot_schema() -> SystemSchema {
    SystemSchema::from_file(data_path("robot.schema.json")).expect("shipped schema loads")
}

pub fn robot_model() -> UtilityModel {
    UtilityModel::from_file(data_path("robot.utility.json")).expect("shipped model loads")
}

pub fn robot_config() -> EngineConfig {
    EngineConfig::from_file(data_path("robot.config.json")).expect("shipped config loads")
}

/// The full shipped stack; `seeded_kb` starts from the example knowledge
/// base instead of an empty one.
pub fn robot_engine(seeded_kb: bool) -> AdaptationEngine {
    let schema = robot_schema();
    let model = robot_model();
    let kb = if seeded_kb {
        let KbLoadReport { kb, quarantined } =
            load_kb(data_path("robot.kb.json"), &schema, &model).expect("shipped kb loads");
        assert!(quarantined.is_empty(), "shipped kb must load cleanly");
        kb
    } else {
        KnowledgeBase::for_schema(&schema)
    };
    AdaptationEngine::new(schema, model, robot_config(), kb).expect("stack assembles")
}

pub fn state_from_file(name: &str) -> SystemState {
    let text = std::fs::read_to_string(data_path(name)).expect("state file reads");
    serde_json::from_str(&text).expect("state file parses")
}

/// Seeded generator of random schemas, models, and states for fuzz and
/// oracle suites.
pub struct InstanceGen {
    pub rng: StdRng,
}

impl InstanceGen {
    pub fn new(seed: u64) -> Self {
        InstanceGen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn schema(&mut self, max_attributes: usize, max_values: usize) -> SystemSchema {
        loop {
            let n = self.rng.random_range(1..=max_attributes);
            let attributes: Vec<AttributeSchema> = (0..n)
                .map(|i| {
                    let values = self.rng.random_range(1..=max_values);
                    AttributeSchema::new(
                        format!("a{i}"),
                        (0..values).map(|v| format!("v{v}")).collect(),
                        if self.rng.random_bool(0.5) {
                            AttributeKind::Nominal
                        } else {
                            AttributeKind::Ordinal
                        },
                        self.rng.random_bool(0.7),
                        self.rng.random_range(0.5..4.0),
                    )
                })
                .collect();
            if let Ok(schema) = SystemSchema::new(attributes) {
                return schema;
            }
            // rejected only when no attribute came out adaptable; redraw
        }
    }

    fn condition(&mut self, schema: &SystemSchema, involved: &[String], depth: usize) -> Condition {
        let atom = |gen: &mut Self| {
            let name = &involved[gen.rng.random_range(0..involved.len())];
            let domain = schema.attribute(name).unwrap().domain();
            Condition::atom(name.clone(), domain[gen.rng.random_range(0..domain.len())].clone())
        };
        if depth == 0 || self.rng.random_bool(0.4) {
            return atom(self);
        }
        match self.rng.random_range(0..3) {
            0 => Condition::And(
                (0..self.rng.random_range(1..=2))
                    .map(|_| self.condition(schema, involved, depth - 1))
                    .collect(),
            ),
            1 => Condition::Or(
                (0..self.rng.random_range(1..=2))
                    .map(|_| self.condition(schema, involved, depth - 1))
                    .collect(),
            ),
            _ => Condition::Not(Box::new(self.condition(schema, involved, depth - 1))),
        }
    }

    pub fn model(&mut self, schema: &SystemSchema, max_functions: usize) -> UtilityModel {
        let names: Vec<String> = schema
            .attributes()
            .iter()
            .map(|a| a.name().to_string())
            .collect();
        let n = self.rng.random_range(1..=max_functions);
        let functions = (0..n)
            .map(|i| {
                let mut involved = BTreeSet::new();
                let count = self.rng.random_range(1..=names.len().min(3));
                while involved.len() < count {
                    involved.insert(names[self.rng.random_range(0..names.len())].clone());
                }
                let involved: Vec<String> = involved.into_iter().collect();
                let rules = (0..self.rng.random_range(0..=3))
                    .map(|_| Rule {
                        when: self.condition(schema, &involved, 2),
                        value: self.rng.random_range(0.0..=1.0),
                    })
                    .collect();
                UtilityFunction::new(
                    format!("f{i}"),
                    involved,
                    rules,
                    self.rng.random_range(0.0..=1.0),
                    self.rng.random_range(0.25..4.0),
                )
            })
            .collect();
        let ut = self.rng.random_range(0.3..0.7);
        UtilityModel::new(functions, ut, 0.0).expect("generated model is structurally valid")
    }

    pub fn state(&mut self, schema: &SystemSchema) -> SystemState {
        SystemState::from_entries(schema.attributes().iter().map(|a| {
            let value = a.domain()[self.rng.random_range(0..a.domain().len())].clone();
            (a.name().to_string(), AttributeValue::Known(value))
        }))
    }

    /// A state with at least one uncertain attribute.
    pub fn uncertain_state(&mut self, schema: &SystemSchema) -> SystemState {
        let mut state = self.state(schema);
        let forced = self.rng.random_range(0..schema.len());
        for (i, attr) in schema.attributes().iter().enumerate() {
            if i == forced || self.rng.random_bool(0.25) {
                state.set(attr.name(), AttributeValue::Uncertain);
            }
        }
        state
    }
}
