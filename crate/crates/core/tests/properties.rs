//! Property suites for the engine's structural invariants.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::InstanceGen;
use selfadapt_core::engine::formulate_request_case;
use selfadapt_core::knowledge::{build_qaf, select_best, Qaf};
use selfadapt_core::usefulness;
use selfadapt_core::utility::Rule;
use selfadapt_core::{
    AttributeKind, AttributeSchema, Case, CaseOrigin, Condition, KnowledgeBase, SystemSchema,
    SystemState, UsefulnessVariant, UtilityFunction, UtilityModel,
};

fn constant_model(values: &[f64], weights: &[f64], ut: f64) -> (UtilityModel, SystemState) {
    let functions = values
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (&v, &w))| UtilityFunction::new(format!("f{i}"), ["a".to_string()], vec![], v, w))
        .collect();
    (
        UtilityModel::new(functions, ut, 0.0).unwrap(),
        SystemState::from_known([("a", "x")]),
    )
}

proptest! {
    /// Scaling every weight by the same positive factor leaves the weighted
    /// geometric mean unchanged.
    #[test]
    fn weight_scale_invariance(
        values in proptest::collection::vec(0.01f64..=1.0, 1..8),
        weights in proptest::collection::vec(0.1f64..=4.0, 8),
        scale in 0.01f64..=100.0,
    ) {
        let weights = &weights[..values.len()];
        let (model, state) = constant_model(&values, weights, 0.5);
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let (scaled_model, _) = constant_model(&values, &scaled, 0.5);
        let a = model.overall_utility(&state).unwrap();
        let b = scaled_model.overall_utility(&state).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    /// The mean always sits between the smallest and largest input.
    #[test]
    fn aggregation_boundedness(
        values in proptest::collection::vec(0.0f64..=1.0, 1..8),
        weights in proptest::collection::vec(0.1f64..=4.0, 8),
    ) {
        let weights = &weights[..values.len()];
        let (model, state) = constant_model(&values, weights, 0.5);
        let overall = model.overall_utility(&state).unwrap();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(overall >= min - 1e-12 && overall <= max + 1e-12);
    }

    /// A zero value annihilates the mean regardless of the other inputs.
    #[test]
    fn zero_absorption(
        values in proptest::collection::vec(0.0f64..=1.0, 1..8),
        weights in proptest::collection::vec(0.1f64..=4.0, 8),
        zero_at in 0usize..8,
    ) {
        let mut values = values;
        let at = zero_at % values.len();
        values[at] = 0.0;
        let weights = &weights[..values.len()];
        let (model, state) = constant_model(&values, weights, 0.5);
        prop_assert_eq!(model.overall_utility(&state).unwrap(), 0.0);
    }

    /// Swapping two rules with mutually exclusive conditions never changes
    /// the evaluation.
    #[test]
    fn disjoint_rule_order_is_irrelevant(
        v1 in 0.0f64..=1.0,
        v2 in 0.0f64..=1.0,
        default in 0.0f64..=1.0,
        current in 0usize..3,
    ) {
        let domain = ["x", "y", "z"];
        let rule = |value: &str, out: f64| Rule { when: Condition::atom("a", value), value: out };
        let forward = UtilityFunction::new(
            "f", ["a".to_string()], vec![rule("x", v1), rule("y", v2)], default, 1.0);
        let backward = UtilityFunction::new(
            "f", ["a".to_string()], vec![rule("y", v2), rule("x", v1)], default, 1.0);
        let state = SystemState::from_known([("a", domain[current])]);
        prop_assert_eq!(forward.eval(&state).unwrap(), backward.eval(&state).unwrap());
    }

    /// Appending an attribute with k values multiplies the state space by k.
    #[test]
    fn state_space_is_multiplicative(
        sizes in proptest::collection::vec(1usize..6, 1..6),
        extra in 1usize..6,
    ) {
        let attr = |i: usize, k: usize| AttributeSchema::new(
            format!("a{i}"),
            (0..k).map(|v| format!("v{v}")).collect(),
            AttributeKind::Nominal,
            true,
            1.0,
        );
        let base: Vec<AttributeSchema> =
            sizes.iter().enumerate().map(|(i, &k)| attr(i, k)).collect();
        let schema = SystemSchema::new(base.clone()).unwrap();
        let mut extended = base;
        extended.push(attr(sizes.len(), extra));
        let larger = SystemSchema::new(extended).unwrap();
        prop_assert_eq!(larger.state_space_size(), schema.state_space_size() * extra as u128);
    }

    /// Paper-variant usefulness: full similarity pins the score to one, the
    /// score stays in range, and it never increases with stored utility.
    #[test]
    fn paper_usefulness_shape(
        sim in 0.0f64..=1.0,
        u1 in 0.0f64..=1.0,
        u2 in 0.0f64..=1.0,
    ) {
        prop_assert_eq!(usefulness(1.0, u1, UsefulnessVariant::Paper), 1.0);
        let score = usefulness(sim, u1, UsefulnessVariant::Paper);
        prop_assert!((0.0..=1.0).contains(&score));
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(
            usefulness(sim, hi, UsefulnessVariant::Paper)
                <= usefulness(sim, lo, UsefulnessVariant::Paper) + 1e-15
        );
    }

    /// Complement-variant usefulness grows with both similarity and utility.
    #[test]
    fn complement_usefulness_is_monotone(
        s1 in 0.0f64..=1.0,
        s2 in 0.0f64..=1.0,
        u1 in 0.0f64..=1.0,
        u2 in 0.0f64..=1.0,
    ) {
        let (slo, shi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (ulo, uhi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(
            usefulness(shi, ulo, UsefulnessVariant::Complement)
                >= usefulness(slo, ulo, UsefulnessVariant::Complement) - 1e-15
        );
        prop_assert!(
            usefulness(slo, uhi, UsefulnessVariant::Complement)
                >= usefulness(slo, ulo, UsefulnessVariant::Complement) - 1e-15
        );
    }

    /// Shuffling frame entries never changes which case is selected.
    #[test]
    fn selection_is_permutation_invariant(
        scores in proptest::collection::vec((0.0f64..=1.0, 0.51f64..=1.0), 1..12),
        seed in any::<u64>(),
    ) {
        let entries: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, &(sim, utility))| selfadapt_core::QafEntry {
                case: Case::new(
                    format!("c{i}"),
                    SystemState::from_known([("a", "x")]),
                    utility,
                    CaseOrigin::Seeded,
                )
                .unwrap(),
                similarity: sim,
                usefulness: usefulness(sim, utility, UsefulnessVariant::Paper),
            })
            .collect();
        let baseline = select_best(&Qaf { entries: entries.clone() })
            .unwrap()
            .case
            .id()
            .to_string();

        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = entries;
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let chosen = select_best(&Qaf { entries: shuffled.clone() })
            .unwrap()
            .case
            .id()
            .to_string();
        prop_assert_eq!(&baseline, &chosen);

        // And it must agree with a full sort by the same key.
        let mut sorted = shuffled;
        sorted.sort_by(|a, b| {
            b.usefulness
                .partial_cmp(&a.usefulness)
                .unwrap()
                .then(b.case.utility().partial_cmp(&a.case.utility()).unwrap())
                .then(a.case.id().cmp(b.case.id()))
        });
        prop_assert_eq!(&baseline, &sorted[0].case.id().to_string());
    }
}

/// Weighted similarity must equal a direct re-computation: sum the
/// weighted local similarities over the included attributes and divide by
/// the included weight mass.
#[test]
fn case_similarity_matches_weighted_average_oracle() {
    use selfadapt_core::similarity::{case_similarity, local_similarity, RequestCase};

    let mut gen = InstanceGen::new(0x0051_3141);
    for _ in 0..500 {
        let schema = gen.schema(5, 4);
        let request = gen.state(&schema);
        let case_state = gen.state(&schema);
        let case = Case::new("c", case_state, 0.9, CaseOrigin::Seeded).unwrap();
        // random non-empty inclusion set
        let mut included = BTreeSet::new();
        while included.is_empty() {
            for attr in schema.attributes() {
                if gen.rng.random_bool(0.6) {
                    included.insert(attr.name().to_string());
                }
            }
        }
        let request_case = RequestCase::from_state(&request, &included).unwrap();
        let actual = case_similarity(&request_case, &case, &schema, &included).unwrap();

        let mut weighted = 0.0;
        let mut mass = 0.0;
        for name in &included {
            let attr = schema.attribute(name).unwrap();
            let local =
                local_similarity(attr, request.known(name).unwrap(), case.state().known(name).unwrap())
                    .unwrap();
            weighted += attr.weight() * local;
            mass += attr.weight();
        }
        assert!((actual - weighted / mass).abs() <= 1e-12);
    }
}

/// Exhaustive check on small schemas: a state validates exactly when it is
/// complete and every known value is a domain member.
#[test]
fn validate_state_matches_exhaustive_predicate() {
    let schema = SystemSchema::new(vec![
        AttributeSchema::new(
            "a",
            vec!["x".into(), "y".into()],
            AttributeKind::Nominal,
            true,
            1.0,
        ),
        AttributeSchema::new(
            "b",
            vec!["u".into(), "v".into(), "w".into()],
            AttributeKind::Ordinal,
            false,
            1.0,
        ),
        AttributeSchema::new("c", vec!["1".into()], AttributeKind::Nominal, true, 1.0),
    ])
    .unwrap();

    // Candidate values per attribute include an alien symbol and "absent".
    let pools: Vec<(&str, Vec<Option<&str>>)> = vec![
        ("a", vec![Some("x"), Some("y"), Some("alien"), None]),
        ("b", vec![Some("u"), Some("v"), Some("w"), Some("alien"), None]),
        ("c", vec![Some("1"), Some("alien"), None]),
    ];
    let mut checked = 0;
    for a in &pools[0].1 {
        for b in &pools[1].1 {
            for c in &pools[2].1 {
                let mut state = SystemState::new();
                let mut expected_valid = true;
                for (name, value) in [("a", a), ("b", b), ("c", c)] {
                    match value {
                        Some(v) => {
                            state.set(name, selfadapt_core::AttributeValue::known(*v));
                            if !schema.attribute(name).unwrap().contains(v) {
                                expected_valid = false;
                            }
                        }
                        None => expected_valid = false, // incomplete
                    }
                }
                assert_eq!(
                    schema.validate_state(&state).is_ok(),
                    expected_valid,
                    "disagreement on {state:?}"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 60);
}

/// Request analysis must agree with a plain double-loop oracle that sweeps
/// every single-attribute substitution, including the all-involved fallback
/// when nothing restores a broken function.
#[test]
fn analysis_matches_substitution_oracle() {
    let mut gen = InstanceGen::new(0xa11a_1515);
    for _ in 0..600 {
        let schema = gen.schema(4, 4);
        let model = gen.model(&schema, 4);
        let state = gen.state(&schema);
        let analysis = model.analyze_request(&state, &schema).unwrap();

        let mut breakers = BTreeSet::new();
        let mut unadaptable = BTreeSet::new();
        for f in model.functions() {
            if f.eval(&state).unwrap() >= model.ut() {
                continue;
            }
            let mut adaptable_names = Vec::new();
            let mut rescued = false;
            for name in f.involved() {
                let attr = schema.attribute(name).unwrap();
                let current = state.known(name).unwrap();
                let restores = attr.domain().iter().any(|v| {
                    v != current
                        && f.eval(&state.with_value(
                            name,
                            selfadapt_core::AttributeValue::known(v.clone()),
                        ))
                        .unwrap()
                            >= model.ut()
                });
                if attr.adaptable() {
                    adaptable_names.push(name.clone());
                    if restores {
                        breakers.insert(name.clone());
                        rescued = true;
                    }
                } else if restores {
                    unadaptable.insert(name.clone());
                }
            }
            if !rescued {
                breakers.extend(adaptable_names);
            }
        }
        let mut antagonists = BTreeSet::new();
        for f in model.functions() {
            let base = f.eval(&state).unwrap();
            for name in f.involved() {
                let attr = schema.attribute(name).unwrap();
                if !attr.adaptable() || breakers.contains(name) {
                    continue;
                }
                let current = state.known(name).unwrap();
                if attr.domain().iter().any(|v| {
                    v != current
                        && f.eval(&state.with_value(
                            name,
                            selfadapt_core::AttributeValue::known(v.clone()),
                        ))
                        .unwrap()
                            > base
                }) {
                    antagonists.insert(name.clone());
                }
            }
        }

        assert_eq!(analysis.breakers, breakers);
        assert_eq!(analysis.antagonists, antagonists);
        assert_eq!(analysis.unadaptable_participants, unadaptable);
    }
}

/// Frame membership invariants on random knowledge bases: similarity within
/// `[beta, 1]` and exact agreement on every unadaptable attribute.
#[test]
fn qaf_membership_invariants() {
    let mut gen = InstanceGen::new(0x9af_0001);
    for _ in 0..400 {
        let schema = gen.schema(5, 4);
        let model = gen.model(&schema, 3);
        let mut kb = KnowledgeBase::for_schema(&schema);
        for i in 0..gen.rng.random_range(0..10usize) {
            let state = gen.state(&schema);
            let utility = gen.rng.random_range(0.0..=1.0);
            if let Ok(case) = Case::new(format!("c{i}"), state, utility, CaseOrigin::Generated) {
                kb.retain(case, &model);
            }
        }
        let request = gen.state(&schema);
        let analysis = model.analyze_request(&request, &schema).unwrap();
        let (request_case, included) =
            formulate_request_case(&request, &analysis.breakers, &schema).unwrap();
        let beta = gen.rng.random_range(0.0..=1.0);
        let qaf = build_qaf(
            &request_case,
            &request,
            &kb,
            &schema,
            beta,
            &included,
            UsefulnessVariant::Paper,
        );
        for entry in &qaf.entries {
            assert!(entry.similarity >= beta && entry.similarity <= 1.0 + 1e-12);
            assert!((0.0..=1.0).contains(&entry.usefulness));
            for attr in schema.attributes().iter().filter(|a| !a.adaptable()) {
                assert_eq!(
                    entry.case.state().known(attr.name()),
                    request.known(attr.name()),
                    "frame admitted a case disagreeing on unadaptable `{}`",
                    attr.name()
                );
            }
        }
    }
}

/// Fuzz of the uncertainty-aware pipeline: whatever the paradigm decides,
/// adapted responses clear the threshold, keep every known unadaptable
/// value, pin uncertain unadaptable values to their worst completion, and
/// replay identically.
#[test]
fn uncertain_pipeline_postconditions() {
    use selfadapt_core::engine::HandleOutcome;
    use selfadapt_core::{
        AdaptationEngine, AdaptationRequest, AttributeValue, EngineConfig, KnowledgeBase,
    };

    let mut gen = InstanceGen::new(0x00c3_17a1);
    let mut adapted = 0u32;
    let mut withheld = 0u32;
    for round in 0..1500u64 {
        let schema = gen.schema(5, 4);
        let model = gen.model(&schema, 3);
        let state = gen.uncertain_state(&schema);
        let paradigm = match gen.rng.random_range(0..3) {
            0 => selfadapt_core::Paradigm::Optimistic,
            1 => selfadapt_core::Paradigm::Pessimistic,
            _ => selfadapt_core::Paradigm::Hybrid,
        };
        let config = EngineConfig {
            paradigm,
            alpha_threshold: gen.rng.random_range(0.0..=1.0),
            ..EngineConfig::default()
        };
        let kb = KnowledgeBase::for_schema(&schema);
        let mut engine =
            AdaptationEngine::new(schema.clone(), model.clone(), config, kb).unwrap();
        let mut replay_engine = engine.clone();
        let request = AdaptationRequest {
            id: format!("u{round}"),
            state,
            issued_at: round,
        };

        match engine.handle_state(&request) {
            Ok(HandleOutcome::Healthy) => unreachable!("state has uncertain values"),
            Ok(HandleOutcome::Withheld { assessment }) => {
                withheld += 1;
                assert!(!selfadapt_core::uncertainty::decide(
                    &assessment,
                    paradigm,
                    engine.config().alpha_threshold
                ));
            }
            Ok(HandleOutcome::Adapted { response, .. }) => {
                adapted += 1;
                assert!(response.utility > engine.model().ut());
                assert!(response.state.is_fully_known());
                let (concretized, _) = engine.concretize(&request).unwrap();
                for attr in schema.attributes().iter().filter(|a| !a.adaptable()) {
                    match request.state.get(attr.name()) {
                        Some(AttributeValue::Known(v)) => {
                            assert_eq!(response.state.known(attr.name()), Some(v.as_str()));
                        }
                        _ => {
                            // pinned to the worst-case completion
                            assert_eq!(
                                response.state.known(attr.name()),
                                concretized.state.known(attr.name())
                            );
                        }
                    }
                }
                match replay_engine.handle_state(&request).unwrap() {
                    HandleOutcome::Adapted {
                        response: replay, ..
                    } => assert_eq!(
                        serde_json::to_string(&response).unwrap(),
                        serde_json::to_string(&replay).unwrap()
                    ),
                    other => panic!("replay diverged: {other:?}"),
                }
            }
            Err(selfadapt_core::EngineError::NoFeasibleState) => {}
            Err(e) => panic!("unexpected engine error: {e}"),
        }
    }
    assert!(adapted > 100 && withheld > 100, "{adapted} adapted / {withheld} withheld");
}

/// After any retention sequence, every stored case clears the threshold and
/// no two stored states collide.
#[test]
fn kb_gate_survives_arbitrary_retention() {
    let mut gen = InstanceGen::new(0x6a7e_0001);
    for _ in 0..200 {
        let schema = gen.schema(4, 3);
        let model = gen.model(&schema, 3);
        let mut kb = KnowledgeBase::for_schema(&schema);
        for i in 0..40 {
            let state = gen.state(&schema);
            let utility = gen.rng.random_range(0.0..=1.0);
            if let Ok(case) = Case::new(format!("c{i}"), state, utility, CaseOrigin::Generated) {
                kb.retain(case, &model);
            }
        }
        for case in kb.cases() {
            assert!(case.utility() > model.ut());
        }
        let states: BTreeSet<String> = kb
            .cases()
            .iter()
            .map(|c| serde_json::to_string(c.state()).unwrap())
            .collect();
        assert_eq!(states.len(), kb.len(), "duplicate states slipped in");
    }
}
