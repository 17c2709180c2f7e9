//! Command-line front end: scenario runs, one-shot adaptations, and
//! knowledge-base inspection.
//!
//! Exit codes: 0 on success, 1 when the engine failed during a run (or a
//! one-shot adaptation found no feasible state), 2 on input errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use selfadapt_core::engine::HandleOutcome;
use selfadapt_core::knowledge::{load_kb, save_kb, KbError, KbLoadReport};
use selfadapt_core::mediator::run_scenario;
use selfadapt_core::scenario::Scenario;
use selfadapt_core::state::SystemState;
use selfadapt_core::{
    AdaptationEngine, AdaptationRequest, EngineConfig, KnowledgeBase, SystemSchema, UtilityModel,
};

#[derive(Parser)]
#[command(
    name = "selfadapt",
    version,
    about = "Utility-driven self-adaptation engine with case-based retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario against the simulated managed system.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        utility: PathBuf,
        /// Knowledge base file; created empty if missing, persisted back on exit.
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the run report (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Adapt a single state file and print the response.
    AdaptOnce {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        utility: PathBuf,
        /// Optional starting knowledge base (read-only for this command).
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Knowledge base utilities.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Print the version.
    Version,
}

#[derive(Subcommand)]
enum KbCommand {
    /// Validate a knowledge base against a schema and utility model.
    Validate {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        utility: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print summary statistics of a knowledge base file.
    Stats {
        #[arg(long)]
        kb: PathBuf,
    },
}

const EXIT_ENGINE_FAILURE: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run {
            scenario,
            schema,
            utility,
            kb,
            config,
            report,
        } => cmd_run(&scenario, &schema, &utility, &kb, config.as_deref(), report.as_deref()),
        Command::AdaptOnce {
            state,
            schema,
            utility,
            kb,
            config,
        } => cmd_adapt_once(&state, &schema, &utility, kb.as_deref(), config.as_deref()),
        Command::Kb(KbCommand::Validate {
            kb,
            schema,
            utility,
            config,
        }) => cmd_kb_validate(&kb, &schema, &utility, config.as_deref()),
        Command::Kb(KbCommand::Stats { kb }) => cmd_kb_stats(&kb),
        Command::Version => {
            println!("selfadapt {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(path) => EngineConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display())),
        None => Ok(EngineConfig::default()),
    }
}

/// Loads the full engine stack. The knowledge base path may be absent or
/// point to a missing file, in which case the engine starts empty.
fn load_engine(
    schema_path: &Path,
    utility_path: &Path,
    kb_path: Option<&Path>,
    config_path: Option<&Path>,
) -> Result<AdaptationEngine> {
    let schema = SystemSchema::from_file(schema_path)
        .with_context(|| format!("loading schema {}", schema_path.display()))?;
    let model = UtilityModel::from_file(utility_path)
        .with_context(|| format!("loading utility model {}", utility_path.display()))?;
    let config = load_config(config_path)?;
    // The config's ut/epsilon overrides must gate KB loading too, so apply
    // them before the quarantine pass.
    let effective = model
        .clone()
        .with_thresholds(config.ut, config.epsilon)
        .context("applying config thresholds")?;
    let kb = match kb_path {
        Some(path) if path.exists() => {
            let KbLoadReport { kb, quarantined } = load_kb(path, &schema, &effective)
                .with_context(|| format!("loading knowledge base {}", path.display()))?;
            for q in &quarantined {
                eprintln!("quarantined case `{}`: {}", q.record.id, q.reason);
            }
            kb
        }
        _ => KnowledgeBase::for_schema(&schema),
    };
    AdaptationEngine::new(schema, model, config, kb).context("assembling the engine stack")
}

fn cmd_run(
    scenario_path: &Path,
    schema_path: &Path,
    utility_path: &Path,
    kb_path: &Path,
    config_path: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<ExitCode> {
    let scenario = Scenario::from_file(scenario_path)
        .with_context(|| format!("loading scenario {}", scenario_path.display()))?;
    let mut engine = load_engine(schema_path, utility_path, Some(kb_path), config_path)?;
    let report = run_scenario(&scenario, &mut engine).context("running scenario")?;

    save_kb(engine.kb(), kb_path)
        .with_context(|| format!("persisting knowledge base {}", kb_path.display()))?;
    let json = report.to_json().context("serialising report")?;
    match report_path {
        Some(path) => std::fs::write(path, &json)
            .with_context(|| format!("writing report {}", path.display()))?,
        None => print!("{json}"),
    }
    eprintln!(
        "ticks: {}  issued: {}  retrieved: {}  generated: {}  failures: {}  kb: {}",
        report.summary.ticks,
        report.summary.adaptations_issued,
        report.summary.retrieval_count,
        report.summary.generation_count,
        report.summary.engine_failures,
        engine.kb().len(),
    );
    if report.summary.engine_failures > 0 {
        return Ok(ExitCode::from(EXIT_ENGINE_FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_adapt_once(
    state_path: &Path,
    schema_path: &Path,
    utility_path: &Path,
    kb_path: Option<&Path>,
    config_path: Option<&Path>,
) -> Result<ExitCode> {
    let text = std::fs::read_to_string(state_path)
        .with_context(|| format!("reading state {}", state_path.display()))?;
    let state: SystemState = serde_json::from_str(&text)
        .with_context(|| format!("parsing state {}", state_path.display()))?;
    let mut engine = load_engine(schema_path, utility_path, kb_path, config_path)?;
    engine
        .schema()
        .validate_state(&state)
        .context("state does not match the schema")?;

    let request = AdaptationRequest {
        id: "adhoc".into(),
        state,
        issued_at: 0,
    };
    let outcome = match engine.handle_state(&request) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("adaptation failed: {e}");
            return Ok(ExitCode::from(EXIT_ENGINE_FAILURE));
        }
    };

    let mut output = BTreeMap::new();
    output.insert("request_id", serde_json::to_value(&request.id)?);
    match outcome {
        HandleOutcome::Healthy => {
            output.insert("note", "no adaptation needed".into());
            output.insert("state", serde_json::to_value(&request.state)?);
        }
        HandleOutcome::Withheld { assessment } => {
            output.insert("assessment", serde_json::to_value(assessment)?);
            output.insert(
                "note",
                "uncertain state; paradigm withheld the adaptation".into(),
            );
        }
        HandleOutcome::Adapted {
            assessment,
            response,
        } => {
            if let Some(assessment) = assessment {
                output.insert("assessment", serde_json::to_value(assessment)?);
            }
            output.insert("response", serde_json::to_value(&response)?);
        }
    }
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_kb_validate(
    kb_path: &Path,
    schema_path: &Path,
    utility_path: &Path,
    config_path: Option<&Path>,
) -> Result<ExitCode> {
    let schema = SystemSchema::from_file(schema_path)
        .with_context(|| format!("loading schema {}", schema_path.display()))?;
    let model = UtilityModel::from_file(utility_path)
        .with_context(|| format!("loading utility model {}", utility_path.display()))?;
    let config = load_config(config_path)?;
    let model = model
        .with_thresholds(config.ut, config.epsilon)
        .context("applying config thresholds")?;
    let report = match load_kb(kb_path, &schema, &model) {
        Ok(report) => report,
        Err(e @ KbError::SchemaMismatch { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_INPUT_ERROR));
        }
        Err(e) => return Err(e).context("loading knowledge base"),
    };
    println!(
        "cases: {}  quarantined: {}  schema: {}",
        report.kb.len(),
        report.quarantined.len(),
        report.kb.schema_fingerprint()
    );
    for q in &report.quarantined {
        println!("quarantined `{}`: {}", q.record.id, q.reason);
    }
    if report.quarantined.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_ENGINE_FAILURE))
    }
}

fn cmd_kb_stats(kb_path: &Path) -> Result<ExitCode> {
    // Stats read the raw file without needing the schema or model.
    #[derive(serde::Deserialize)]
    struct RawCase {
        #[allow(dead_code)]
        id: String,
        utility: f64,
        origin: selfadapt_core::CaseOrigin,
    }
    #[derive(serde::Deserialize)]
    struct RawKb {
        schema_fingerprint: String,
        cases: Vec<RawCase>,
    }
    let text = std::fs::read_to_string(kb_path)
        .with_context(|| format!("reading knowledge base {}", kb_path.display()))?;
    let raw: RawKb = serde_json::from_str(&text)
        .with_context(|| format!("parsing knowledge base {}", kb_path.display()))?;

    let seeded = raw
        .cases
        .iter()
        .filter(|c| matches!(c.origin, selfadapt_core::CaseOrigin::Seeded))
        .count();
    println!("schema: {}", raw.schema_fingerprint);
    println!(
        "cases: {} ({} seeded, {} generated)",
        raw.cases.len(),
        seeded,
        raw.cases.len() - seeded
    );
    if !raw.cases.is_empty() {
        let utilities: Vec<f64> = raw.cases.iter().map(|c| c.utility).collect();
        let min = utilities.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = utilities.iter().sum::<f64>() / utilities.len() as f64;
        println!("utility: min {min:.3}  mean {mean:.3}  max {max:.3}");
    }
    Ok(ExitCode::SUCCESS)
}
