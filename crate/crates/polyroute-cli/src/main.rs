//! polyroute: cost-aware multimodal query routing at the command line.
//!
//! Subcommands: `classify` (intake + intent, one line per query),
//! `route` (full decision ledger with per-candidate components), `run`
//! (JSONL in, JSONL out, with session persistence), `serve` (the same
//! request/response shapes over a local socket), `sweep` (threshold and
//! cost/accuracy grids as CSV), `eval` (corpus evaluation reports),
//! `report` (ledger CSV), `feedback` (fallback/reroute against a logged
//! decision), `gen-corpus`, and `config`.
//!
//! The run seed resolves from `--seed`, then the `POLYROUTE_SEED`
//! environment variable, then the configuration file.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use polyroute_core::backend::CostLedger;
use polyroute_core::complexity::{calibrate_tau, complexity, sweep_tau};
use polyroute_core::config::EngineConfig;
use polyroute_core::corpus::{generate_corpus, generate_validation, Corpus};
use polyroute_core::couplet::AnnotationStore;
use polyroute_core::engine::{Engine, EngineResponse};
use polyroute_core::eval::{
    cost_csv, evaluate, latency_csv, metrics_csv, pareto_csv, pareto_sweep, summary_text,
};
use polyroute_core::feedback::{
    adjustment_digest, FeedbackEvent, FeedbackKind, FeedbackOutcome, OriginalOutcome,
    ReportedProblem,
};
use polyroute_core::intake::{classify_intake, FixtureTranscriber};
use polyroute_core::intent::{classify_intent, CentroidIndex, RuleCompositeClassifier};
use polyroute_core::model::{Attachment, ExecutionCategory, PolicyMode, Query, UserPolicy};
use polyroute_core::planner::{route_nontext, route_text};

#[derive(Parser)]
#[command(name = "polyroute", version, about = "Cost-aware multimodal query routing engine")]
struct Cli {
    /// Engine configuration file (JSON); bundled defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed override (also: POLYROUTE_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify intake and intent without executing anything.
    Classify {
        /// Print the bundled MIME/extension/magic tables and exit.
        #[arg(long)]
        dump_tables: bool,
        /// Inline query text.
        #[arg(long)]
        text: Option<String>,
        /// Attachment file paths.
        #[arg(long)]
        attach: Vec<PathBuf>,
        /// JSONL query stream (same schema as `run`).
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Print the full routing decision ledger for one query.
    Route {
        #[arg(long)]
        text: Option<String>,
        #[arg(long)]
        attach: Vec<PathBuf>,
        /// Policy mode: auto, premium_allowed, or open_source_only.
        #[arg(long, default_value = "auto")]
        policy: String,
    },
    /// Execute queries end to end: JSONL in, JSONL out.
    Run {
        /// JSONL query stream; stdin when absent.
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Output JSONL path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force a specific route id (for example `couplet-vision`).
        #[arg(long)]
        route: Option<String>,
        /// Print the per-query decision ledger and fusion trace.
        #[arg(long)]
        explain: bool,
        /// State directory for sessions, decisions, and the ledger.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Corpus directory supplying tool annotations for fixtures.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
    },
    /// Gateway mode: the run request/response shapes over a local socket.
    Serve {
        #[arg(long, default_value = "127.0.0.1:4710")]
        addr: String,
        /// Exit after this many connections (useful for scripted runs).
        #[arg(long)]
        max_conns: Option<usize>,
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
    },
    /// Threshold and cost/accuracy sweeps as CSV.
    Sweep {
        #[command(subcommand)]
        mode: SweepMode,
    },
    /// Evaluate a corpus and emit the report tables.
    Eval {
        /// Corpus directory (corpus.jsonl, fixtures/, annotations.json).
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory for CSVs and the summary.
        #[arg(long, default_value = "eval-out")]
        out: PathBuf,
    },
    /// Ledger CSV from a run's state directory.
    Report {
        #[arg(long)]
        state: PathBuf,
    },
    /// Feedback against a logged decision, or the adjustment digest.
    Feedback {
        /// Query id to retry; omit with --digest.
        query_id: Option<String>,
        /// unsatisfactory or routing_error.
        kind: Option<String>,
        /// wrong_model, wrong_modality, or missing_context.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        state: PathBuf,
        /// Print the per-(category, route) adjustment digest instead.
        #[arg(long)]
        digest: bool,
    },
    /// Generate the bundled corpus, fixtures, and validation set.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the active engine configuration as JSON.
    Config,
}

#[derive(Subcommand)]
enum SweepMode {
    /// Sweep the escalation threshold against a validation set.
    Tau {
        /// Corpus directory containing validation.jsonl.
        #[arg(long)]
        corpus: PathBuf,
        /// Cost budget for the calibrated pick.
        #[arg(long, default_value_t = f64::INFINITY)]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost/accuracy grid over tau and the cost penalty.
    Pareto {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated tau grid.
        #[arg(long, default_value = "0.35,0.45,0.55,0.65,0.75")]
        taus: String,
        /// Comma-separated lambda_c grid.
        #[arg(long, default_value = "0.05,0.10,0.20")]
        lambdas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// One JSONL input line for `run`, `serve`, and `classify --queries`.
#[derive(Debug, Deserialize)]
struct QuerySpec {
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    attachments: Vec<AttachmentSpec>,
    session: Option<String>,
    policy: Option<String>,
    budget: Option<f64>,
    arrived_at: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct AttachmentSpec {
    path: String,
    mime: Option<String>,
}

#[derive(Debug, Serialize)]
struct ClassifyLine<'a> {
    query_id: &'a str,
    modality: String,
    input_kind: String,
    execution_category: String,
    category: String,
    stage: String,
    confidence: f64,
    complexity_score: Option<f64>,
    is_followup: bool,
}

fn parse_policy(mode: &str, budget: Option<f64>) -> Result<UserPolicy> {
    let mode = match mode {
        "auto" => PolicyMode::Auto,
        "premium_allowed" => PolicyMode::PremiumAllowed,
        "open_source_only" | "open" => PolicyMode::OpenSourceOnly,
        other => bail!("unknown policy mode `{other}`"),
    };
    Ok(match budget {
        Some(b) => UserPolicy::new(mode, b, false).map_err(|e| anyhow!(e.to_string()))?,
        None => UserPolicy { mode, cost_budget: 0.0, unlimited: true },
    })
}

fn spec_to_query(spec: QuerySpec, line: usize, base: Option<&Path>) -> Result<Query> {
    let id = spec.id.unwrap_or_else(|| format!("q{line:05}"));
    let mut attachments = Vec::new();
    for att in spec.attachments {
        let path = match base {
            Some(dir) if !Path::new(&att.path).is_absolute() => dir.join(&att.path),
            _ => PathBuf::from(&att.path),
        };
        let bytes =
            std::fs::read(&path).with_context(|| format!("reading attachment {path:?}"))?;
        let filename = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or(att.path.as_str())
            .to_string();
        attachments.push(
            Attachment::new(filename, att.mime.unwrap_or_default(), bytes)
                .map_err(|e| anyhow!(e.to_string()))?,
        );
    }
    let policy = parse_policy(spec.policy.as_deref().unwrap_or("auto"), spec.budget)?;
    Query::new(
        id.clone(),
        spec.text.unwrap_or_default(),
        attachments,
        spec.session.unwrap_or_else(|| format!("sess-{id}")),
        policy,
        spec.arrived_at.unwrap_or(line as u64 * 1000),
    )
    .map_err(|e| anyhow!(e.to_string()))
}

fn load_config(cli: &Cli) -> Result<EngineConfig> {
    let mut config = match &cli.config {
        Some(path) => EngineConfig::load(path).map_err(|e| anyhow!(e.to_string()))?,
        None => EngineConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        config.run_seed = seed;
    } else if let Ok(value) = std::env::var("POLYROUTE_SEED") {
        config.run_seed = value
            .parse()
            .with_context(|| format!("POLYROUTE_SEED must be an integer, got `{value}`"))?;
    }
    Ok(config)
}

fn read_query_lines(path: Option<&Path>) -> Result<Vec<String>> {
    let raw = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            buf
        }
    };
    Ok(raw.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect())
}

fn load_annotations(dir: Option<&Path>) -> Result<AnnotationStore> {
    match dir {
        Some(d) => {
            let raw = std::fs::read_to_string(d.join("annotations.json"))?;
            Ok(serde_json::from_str(&raw)?)
        }
        None => Ok(AnnotationStore::default()),
    }
}

fn cmd_classify(
    config: &EngineConfig,
    dump_tables: bool,
    text: Option<String>,
    attach: Vec<PathBuf>,
    queries: Option<PathBuf>,
) -> Result<()> {
    if dump_tables {
        println!("{}", serde_json::to_string_pretty(&config.intake)?);
        return Ok(());
    }
    let mut inputs: Vec<Query> = Vec::new();
    if text.is_some() || !attach.is_empty() {
        let attachments = attach
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p)?;
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("attachment");
                Attachment::new(name, "", bytes).map_err(|e| anyhow!(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        inputs.push(
            Query::new(
                "q0",
                text.unwrap_or_default(),
                attachments,
                "sess-cli",
                UserPolicy::default(),
                0,
            )
            .map_err(|e| anyhow!(e.to_string()))?,
        );
    } else {
        for (i, line) in read_query_lines(queries.as_deref())?.into_iter().enumerate() {
            let spec: QuerySpec = serde_json::from_str(&line)?;
            inputs.push(spec_to_query(spec, i, None)?);
        }
    }

    let centroids =
        CentroidIndex::build(&config.exemplars).map_err(|e| anyhow!(e.to_string()))?;
    let classifier = RuleCompositeClassifier::new(config.keywords.clone(), &config.intent);
    for query in &inputs {
        let intake = classify_intake(query, &FixtureTranscriber, &config.intake)
            .map_err(|e| anyhow!(e.to_string()))?;
        let text = if query.has_text() {
            query.text.clone()
        } else {
            intake.transcript.clone().unwrap_or_default()
        };
        let (category, stage, confidence, score) = if !text.is_empty() {
            let profile = complexity(&text, &config.keywords, &config.complexity)
                .map_err(|e| anyhow!(e.to_string()))?;
            let intent = classify_intent(
                &text,
                &profile.signals,
                &config.keywords,
                &centroids,
                &classifier,
                &config.intent,
            )
            .map_err(|e| anyhow!(e.to_string()))?;
            (
                intent.category.to_string(),
                serde_json::to_value(intent.stage)?.as_str().unwrap_or_default().to_string(),
                intent.confidence,
                Some(profile.score),
            )
        } else {
            ("(from modality)".to_string(), "intake".to_string(), 1.0, None)
        };
        let line = ClassifyLine {
            query_id: &query.id,
            modality: intake.modality.to_string(),
            input_kind: serde_json::to_value(intake.input_kind)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            execution_category: serde_json::to_value(intake.execution_category)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            category,
            stage,
            confidence,
            complexity_score: score,
            is_followup: false,
        };
        println!("{}", serde_json::to_string(&line)?);
    }
    Ok(())
}

fn cmd_route(
    config: &EngineConfig,
    text: Option<String>,
    attach: Vec<PathBuf>,
    policy: &str,
) -> Result<()> {
    let policy = parse_policy(policy, None)?;
    let attachments = attach
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p)?;
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("attachment");
            Attachment::new(name, "", bytes).map_err(|e| anyhow!(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let query = Query::new("q0", text.unwrap_or_default(), attachments, "sess-cli", policy, 0)
        .map_err(|e| anyhow!(e.to_string()))?;
    let intake = classify_intake(&query, &FixtureTranscriber, &config.intake)
        .map_err(|e| anyhow!(e.to_string()))?;

    let decision = if intake.execution_category == ExecutionCategory::TextOnly {
        let profile = complexity(&query.text, &config.keywords, &config.complexity)
            .map_err(|e| anyhow!(e.to_string()))?;
        let centroids =
            CentroidIndex::build(&config.exemplars).map_err(|e| anyhow!(e.to_string()))?;
        let classifier = RuleCompositeClassifier::new(config.keywords.clone(), &config.intent);
        let intent = classify_intent(
            &query.text,
            &profile.signals,
            &config.keywords,
            &centroids,
            &classifier,
            &config.intent,
        )
        .map_err(|e| anyhow!(e.to_string()))?;
        route_text(
            &profile,
            intent.category,
            config.complexity.tau,
            policy,
            &config.routes,
            &config.routing,
        )
    } else {
        route_nontext(
            intake.modality,
            intake.attachment_modalities(),
            polyroute_core::model::TaskCategory::General,
            policy,
            &config.routes,
            &config.routing,
        )
    }
    .map_err(|e| anyhow!(e.to_string()))?;

    println!("{}", serde_json::to_string_pretty(&decision)?);
    Ok(())
}

fn persist_state(engine: &Engine, state: &Path) -> Result<()> {
    std::fs::create_dir_all(state)?;
    for session in engine.memory().session_ids() {
        engine
            .memory()
            .persist_session(&session, &state.join("sessions"))
            .map_err(|e| anyhow!(e.to_string()))?;
    }
    let mut decisions = std::fs::File::create(state.join("decisions.jsonl"))?;
    for outcome in engine.decision_outcomes() {
        writeln!(decisions, "{}", serde_json::to_string(&outcome)?)?;
    }
    std::fs::write(
        state.join("ledger.json"),
        serde_json::to_string_pretty(&engine.pool().ledger_report())?,
    )?;
    let log = engine.feedback_log();
    if !log.is_empty() {
        let mut feedback = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(state.join("feedback.jsonl"))?;
        for entry in log {
            writeln!(feedback, "{}", serde_json::to_string(&entry)?)?;
        }
    }
    Ok(())
}

fn load_sessions(engine: &Engine, state: &Path) -> Result<()> {
    let dir = state.join("sessions");
    if !dir.exists() {
        return Ok(());
    }
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if let Some(name) = path.file_stem().and_then(|s| s.to_str()) {
            engine
                .memory()
                .load_session(name, &dir)
                .map_err(|e| anyhow!(e.to_string()))?;
        }
    }
    Ok(())
}

fn explain(response: &EngineResponse) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} -> {} [{}] category={} cost={:.3} latency={:.1}ms\n",
        response.query_id,
        response.decision.as_ref().map(|d| d.chosen.id.as_str()).unwrap_or("(refused)"),
        response
            .decision
            .as_ref()
            .map(|d| format!("{:?}", d.rationale).to_lowercase())
            .unwrap_or_default(),
        response.category,
        response.cost_charged,
        response.simulated_latency_ms,
    ));
    if let Some(decision) = &response.decision {
        out.push_str("# candidates (route, s_m, s_u, s_t, cost, utility):\n");
        for c in &decision.components {
            out.push_str(&format!(
                "#   {:<20} {:.1} {:.1} {:.2} {:.2} {:+.4}\n",
                c.route_id, c.s_m, c.s_u, c.s_t, c.cost, c.utility
            ));
        }
        for (id, reason) in &decision.excluded {
            out.push_str(&format!("#   excluded {id}: {reason:?}\n"));
        }
    }
    if let Some(graph) = &response.agent_graph {
        out.push_str("# agent graph (node, modality, capability, deps, backend):\n");
        for node in &graph.nodes {
            let backend = response
                .node_backends
                .iter()
                .find(|(id, _)| id == &node.node_id)
                .map(|(_, b)| b.as_str())
                .unwrap_or("?");
            out.push_str(&format!(
                "#   {:<4} {:<10} {:<17} deps={:?} -> {}\n",
                node.node_id,
                node.modality.to_string(),
                format!("{:?}", node.capability).to_lowercase(),
                node.deps,
                backend
            ));
        }
        for (from, to) in graph.edges() {
            out.push_str(&format!("#   edge {from} -> {to}\n"));
        }
    }
    if let Some(fusion) = &response.fusion {
        out.push_str("# fusion (node, relevance, weight):\n");
        for c in &fusion.components {
            out.push_str(&format!("#   {:<8} {:.4} {:.4}\n", c.node_id, c.relevance, c.weight));
        }
        out.push_str(&format!("#   dominance_applied: {}\n", fusion.dominance_applied));
    }
    out
}

fn cmd_run(
    config: EngineConfig,
    queries: Option<PathBuf>,
    out: Option<PathBuf>,
    route: Option<String>,
    explain_flag: bool,
    state: Option<PathBuf>,
    corpus_dir: Option<PathBuf>,
) -> Result<()> {
    let annotations = load_annotations(corpus_dir.as_deref())?;
    let engine = Engine::new(config, annotations).map_err(|e| anyhow!(e.to_string()))?;
    if let Some(state_dir) = &state {
        load_sessions(&engine, state_dir)?;
    }
    let base = queries.as_deref().and_then(Path::parent).map(Path::to_path_buf);
    let mut sink: Box<dyn Write> = match &out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    for (i, line) in read_query_lines(queries.as_deref())?.into_iter().enumerate() {
        let spec: QuerySpec = serde_json::from_str(&line)
            .with_context(|| format!("query line {} is not valid JSON", i + 1))?;
        let query = spec_to_query(spec, i, base.as_deref())?;
        let response = match &route {
            Some(selector) => {
                let route_id = resolve_route(engine.config(), selector)?;
                engine.handle_forced(&query, &route_id)
            }
            None => engine.handle(&query),
        }
        .map_err(|e| anyhow!(e.to_string()))?;
        if explain_flag {
            eprint!("{}", explain(&response));
        }
        writeln!(sink, "{}", serde_json::to_string(&response)?)?;
    }
    if let Some(state_dir) = &state {
        persist_state(&engine, state_dir)?;
    }
    Ok(())
}

/// Resolves a `--route` selector: an exact route id, or a kind alias
/// (`couplet`, `cascade`, `premium`, `efficient`) naming the cheapest
/// route of that kind.
fn resolve_route(config: &EngineConfig, selector: &str) -> Result<String> {
    if config.routes.iter().any(|r| r.id == selector) {
        return Ok(selector.to_string());
    }
    use polyroute_core::planner::RouteKind;
    let kind = match selector {
        "couplet" => RouteKind::Couplet,
        "cascade" => RouteKind::AgentCascade,
        "premium" => RouteKind::Premium,
        "efficient" => RouteKind::Efficient,
        other => bail!("no route id or kind named `{other}`"),
    };
    config
        .routes
        .iter()
        .filter(|r| r.kind == kind)
        .min_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap().then(a.id.cmp(&b.id)))
        .map(|r| r.id.clone())
        .ok_or_else(|| anyhow!("no route of kind `{selector}` in the registry"))
}

fn cmd_serve(
    config: EngineConfig,
    addr: &str,
    max_conns: Option<usize>,
    corpus_dir: Option<PathBuf>,
) -> Result<()> {
    let annotations = load_annotations(corpus_dir.as_deref())?;
    let engine = Engine::new(config, annotations).map_err(|e| anyhow!(e.to_string()))?;
    let listener = std::net::TcpListener::bind(addr)?;
    eprintln!("listening on {}", listener.local_addr()?);
    let mut served = 0usize;
    for stream in listener.incoming() {
        let stream = stream?;
        let mut writer = stream.try_clone()?;
        let reader = BufReader::new(stream);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let reply = match serde_json::from_str::<QuerySpec>(&line)
                .map_err(anyhow::Error::from)
                .and_then(|spec| spec_to_query(spec, i, None))
            {
                Ok(query) => match engine.handle(&query) {
                    Ok(response) => serde_json::to_string(&response)?,
                    Err(e) => format!("{{\"error\": {:?}}}", e.to_string()),
                },
                Err(e) => format!("{{\"error\": {:?}}}", e.to_string()),
            };
            writeln!(writer, "{reply}")?;
        }
        served += 1;
        if max_conns.map(|m| served >= m).unwrap_or(false) {
            break;
        }
    }
    Ok(())
}

fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad grid value `{s}`: {e}")))
        .collect()
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_sweep(config: &EngineConfig, mode: SweepMode) -> Result<()> {
    match mode {
        SweepMode::Tau { corpus, budget, out } => {
            let raw = std::fs::read_to_string(corpus.join("validation.jsonl"))?;
            let validation: Vec<polyroute_core::complexity::ValidationItem> = raw
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<std::result::Result<_, _>>()?;
            let pool = polyroute_core::backend::BackendPool::new(config.pool.clone())
                .map_err(|e| anyhow!(e.to_string()))?;
            let points = sweep_tau(&validation, &config.keywords, &config.complexity, &pool);
            let mut csv = String::from("tau,accuracy,cost\n");
            for p in &points {
                csv.push_str(&format!("{:.2},{:.6},{:.4}\n", p.tau, p.accuracy, p.cost));
            }
            write_or_print(out.as_deref(), &csv)?;
            let threshold = calibrate_tau(
                &validation,
                budget,
                &config.keywords,
                &config.complexity,
                &pool,
                0,
            );
            eprintln!(
                "calibrated tau = {:.2} (accuracy {:.4}, cost {:.2}{})",
                threshold.tau,
                threshold.accuracy,
                threshold.budget_used,
                if threshold.budget_infeasible { ", budget infeasible" } else { "" }
            );
        }
        SweepMode::Pareto { corpus, taus, lambdas, out } => {
            let corpus = Corpus::read_from_dir(&corpus).map_err(|e| anyhow!(e.to_string()))?;
            let rows = pareto_sweep(
                &corpus,
                config,
                &parse_grid(&taus)?,
                &parse_grid(&lambdas)?,
                config.run_seed,
            )
            .map_err(|e| anyhow!(e.to_string()))?;
            write_or_print(out.as_deref(), &pareto_csv(&rows))?;
        }
    }
    Ok(())
}

fn cmd_eval(config: &EngineConfig, corpus_dir: &Path, out: &Path) -> Result<()> {
    let corpus = Corpus::read_from_dir(corpus_dir).map_err(|e| anyhow!(e.to_string()))?;
    let report =
        evaluate(&corpus, config, config.run_seed).map_err(|e| anyhow!(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("metrics.csv"), metrics_csv(&report))?;
    std::fs::write(out.join("cost_breakdown.csv"), cost_csv(&report))?;
    std::fs::write(out.join("latency.csv"), latency_csv(&report))?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    let summary = summary_text(&report);
    std::fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_report(state: &Path) -> Result<()> {
    let raw = std::fs::read_to_string(state.join("ledger.json"))
        .with_context(|| format!("no ledger at {state:?}; run with --state first"))?;
    let ledger: CostLedger = serde_json::from_str(&raw)?;
    println!("backend_id,tier,calls,cost,cost_share_pct");
    for (backend, agg) in &ledger.per_backend {
        println!(
            "{},{},{},{:.4},{:.3}",
            backend,
            agg.tier.as_str(),
            agg.calls,
            agg.cost,
            ledger.backend_cost_share(backend)
        );
    }
    Ok(())
}

fn cmd_feedback(
    config: EngineConfig,
    state: &Path,
    query_id: Option<String>,
    kind: Option<String>,
    problem: Option<String>,
    digest: bool,
) -> Result<()> {
    if digest {
        let raw = std::fs::read_to_string(state.join("feedback.jsonl")).unwrap_or_default();
        let log: Vec<polyroute_core::feedback::FeedbackLogEntry> = raw
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        println!(
            "category,route,events,misroutes,misroute_rate,mean_quality_differential,flagged"
        );
        for row in adjustment_digest(&log, 0.5) {
            println!(
                "{},{},{},{},{:.3},{:+.4},{}",
                row.category,
                row.route_id,
                row.events,
                row.misroutes,
                row.misroute_rate,
                row.mean_quality_differential,
                row.flagged
            );
        }
        return Ok(());
    }

    let query_id = query_id.context("query id required unless --digest")?;
    let kind = match kind.as_deref() {
        Some("unsatisfactory") => FeedbackKind::Unsatisfactory,
        Some("routing_error") => FeedbackKind::RoutingError,
        other => bail!("feedback kind must be unsatisfactory or routing_error, got {other:?}"),
    };
    let reported_problem = match problem.as_deref() {
        None => None,
        Some("wrong_model") => Some(ReportedProblem::WrongModel),
        Some("wrong_modality") => Some(ReportedProblem::WrongModality),
        Some("missing_context") => Some(ReportedProblem::MissingContext),
        Some(other) => bail!("unknown problem `{other}`"),
    };

    let engine =
        Engine::new(config, AnnotationStore::default()).map_err(|e| anyhow!(e.to_string()))?;
    let raw = std::fs::read_to_string(state.join("decisions.jsonl"))
        .with_context(|| format!("no decision log at {state:?}; run with --state first"))?;
    for line in raw.lines().filter(|l| !l.trim().is_empty()) {
        let outcome: OriginalOutcome = serde_json::from_str(line)?;
        engine.restore_decision(outcome);
    }
    let entry = engine
        .feedback(&FeedbackEvent {
            query_id,
            kind,
            reported_problem,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        })
        .map_err(|e| anyhow!(e.to_string()))?;
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(state.join("feedback.jsonl"))?;
    writeln!(log, "{}", serde_json::to_string(&entry)?)?;
    match &entry.outcome {
        FeedbackOutcome::Retried(record) => println!("{}", serde_json::to_string_pretty(record)?),
        FeedbackOutcome::NoRetry { reason } => println!("no retry: {reason}"),
    }
    Ok(())
}

fn cmd_gen_corpus(config: &EngineConfig, out: &Path) -> Result<()> {
    let corpus = generate_corpus(config.run_seed);
    let validation = generate_validation(config.run_seed);
    corpus.write_to_dir(out, &validation).map_err(|e| anyhow!(e.to_string()))?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for record in &corpus.records {
        *counts.entry(record.gold_category.to_string()).or_insert(0) += 1;
    }
    eprintln!(
        "wrote {} records, {} fixtures, validation {} to {}",
        corpus.records.len(),
        corpus.fixtures.files.len(),
        validation.len(),
        out.display()
    );
    for (category, count) in counts {
        eprintln!("  {category}: {count}");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = load_config(&cli)?;
    match cli.command {
        Command::Classify { dump_tables, text, attach, queries } => {
            cmd_classify(&config, dump_tables, text, attach, queries)
        }
        Command::Route { text, attach, policy } => cmd_route(&config, text, attach, &policy),
        Command::Run { queries, out, route, explain, state, corpus_dir } => {
            cmd_run(config, queries, out, route, explain, state, corpus_dir)
        }
        Command::Serve { addr, max_conns, corpus_dir } => {
            cmd_serve(config, &addr, max_conns, corpus_dir)
        }
        Command::Sweep { mode } => cmd_sweep(&config, mode),
        Command::Eval { corpus, out } => cmd_eval(&config, &corpus, &out),
        Command::Report { state } => cmd_report(&state),
        Command::Feedback { query_id, kind, problem, state, digest } => {
            cmd_feedback(config, &state, query_id, kind, problem, digest)
        }
        Command::GenCorpus { out } => cmd_gen_corpus(&config, &out),
        Command::Config => {
            println!("{}", config.to_json_pretty().map_err(|e| anyhow!(e.to_string()))?);
            Ok(())
        }
    }
}
