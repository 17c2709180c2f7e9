//! Per-tick run records and their summary.

use serde::{Deserialize, Serialize};

use crate::engine::AdaptationResponse;
use crate::state::SystemState;
use crate::uncertainty::UncertaintyAssessment;

/// What the mediator saw and did in one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    /// Observed state after this tick's perturbations, before adaptation.
    pub state: SystemState,
    pub uncertain: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<UncertaintyAssessment>,
    /// Whether an adaptation process was issued this tick.
    pub issued: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<AdaptationResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock time spent inside the adapt call, zero when none ran.
    pub latency_us: u64,
    /// Knowledge base size after this tick.
    pub kb_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub adaptations_issued: u64,
    pub adaptations_succeeded: u64,
    pub retrieval_count: u64,
    pub generation_count: u64,
    pub engine_failures: u64,
    pub kb_size_trajectory: Vec<usize>,
    pub mean_latency_us: f64,
    pub max_latency_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default)]
    pub scenario: Option<String>,
    pub records: Vec<TickRecord>,
    pub summary: RunSummary,
}

impl RunReport {
    /// Builds the report, deriving the summary from the records so the
    /// retrieval/generation split always accounts for every success.
    pub fn build(scenario: Option<String>, records: Vec<TickRecord>) -> Self {
        let mut issued = 0;
        let mut retrieval = 0;
        let mut generation = 0;
        let mut failures = 0;
        let mut latency_sum: u128 = 0;
        let mut latency_count: u64 = 0;
        let mut max_latency = 0;
        let mut trajectory = Vec::with_capacity(records.len());
        for record in &records {
            trajectory.push(record.kb_size);
            if record.issued {
                issued += 1;
                latency_sum += u128::from(record.latency_us);
                latency_count += 1;
                max_latency = max_latency.max(record.latency_us);
            }
            match &record.response {
                Some(response) if response.provenance.is_retrieved() => retrieval += 1,
                Some(_) => generation += 1,
                None => {}
            }
            if record.error.is_some() {
                failures += 1;
            }
        }
        let summary = RunSummary {
            ticks: records.len() as u64,
            adaptations_issued: issued,
            adaptations_succeeded: retrieval + generation,
            retrieval_count: retrieval,
            generation_count: generation,
            engine_failures: failures,
            kb_size_trajectory: trajectory,
            mean_latency_us: if latency_count == 0 {
                0.0
            } else {
                latency_sum as f64 / latency_count as f64
            },
            max_latency_us: max_latency,
        };
        RunReport {
            scenario,
            records,
            summary,
        }
    }

    /// Copy with all wall-clock measurements zeroed, for byte-level
    /// comparison of otherwise deterministic runs.
    pub fn normalized(&self) -> RunReport {
        let mut copy = self.clone();
        for record in &mut copy.records {
            record.latency_us = 0;
        }
        copy.summary.mean_latency_us = 0.0;
        copy.summary.max_latency_us = 0;
        copy
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Provenance;
    use std::collections::BTreeSet;

    fn record(tick: u64, provenance: Option<Provenance>, latency_us: u64) -> TickRecord {
        let response = provenance.map(|p| AdaptationResponse {
            id: format!("t{tick}-res"),
            state: SystemState::from_known([("a", "x")]),
            utility: 0.9,
            usefulness: 0.9,
            provenance: p,
            changed: BTreeSet::new(),
        });
        TickRecord {
            tick,
            state: SystemState::from_known([("a", "x")]),
            uncertain: false,
            assessment: None,
            issued: response.is_some(),
            response,
            error: None,
            latency_us,
            kb_size: 1,
        }
    }

    #[test]
    fn summary_splits_retrieval_and_generation() {
        let records = vec![
            record(1, Some(Provenance::GeneratedFirstFit), 10),
            record(
                2,
                Some(Provenance::Retrieved {
                    case_id: "c".into(),
                }),
                4,
            ),
            record(3, None, 0),
        ];
        let report = RunReport::build(Some("t".into()), records);
        assert_eq!(report.summary.adaptations_issued, 2);
        assert_eq!(report.summary.adaptations_succeeded, 2);
        assert_eq!(report.summary.retrieval_count, 1);
        assert_eq!(report.summary.generation_count, 1);
        assert_eq!(report.summary.mean_latency_us, 7.0);
        assert_eq!(report.summary.max_latency_us, 10);
        assert_eq!(report.summary.kb_size_trajectory, vec![1, 1, 1]);
    }

    #[test]
    fn normalized_reports_compare_equal_across_timings() {
        let a = RunReport::build(None, vec![record(1, Some(Provenance::GeneratedFirstFit), 10)]);
        let b = RunReport::build(None, vec![record(1, Some(Provenance::GeneratedFirstFit), 99)]);
        assert_ne!(a, b);
        assert_eq!(a.normalized(), b.normalized());
    }
}
