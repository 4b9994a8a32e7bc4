//! End-to-end composition: intake, complexity and intent analysis,
//! route selection, execution (single route, couplet, or agent graph),
//! and the memory record, behind one `handle` entry point.
//!
//! The engine owns injected state (memory store, cost ledger, decision
//! and feedback logs) so a harness can run thousands of queries
//! hermetically. Non-text queries bypass complexity scoring entirely;
//! the stage trace on every response makes that observable. An
//! infeasible policy yields a structured refusal, never a crash.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{derive_seed, BackendPool, ExecRequest};
use crate::complexity::{complexity, ComplexityProfile};
use crate::config::EngineConfig;
use crate::couplet::{
    couplet_compose, couplet_decompose, couplet_run, AnnotationStore, ToolRegistry,
};
use crate::feedback::{
    handle_feedback, FeedbackEvent, FeedbackLogEntry, FeedbackOutcome, OriginalOutcome,
};
use crate::graph::{decompose, execute_graph, fuse, FusionTrace, GraphRunParams};
use crate::intake::{classify_intake, AudioTranscriber, FixtureTranscriber, IntakeResult};
use crate::intent::{
    classify_intent, detect_followup, CentroidIndex, FollowupEvidence, IntentResult, IntentStage,
    RuleCompositeClassifier,
};
use crate::model::{
    contains_phrase, embed_text, ExecutionCategory, Modality, Query, TaskCategory,
};
use crate::planner::{
    route_nontext, route_text, Route, RouteKind, RouteRationale, RoutingDecision,
};
use crate::{Error, Result};

/// Everything the engine returns for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineResponse {
    pub query_id: String,
    pub payload: String,
    pub category: TaskCategory,
    pub modality: Modality,
    pub execution_category: ExecutionCategory,
    pub decision: Option<RoutingDecision>,
    pub fusion: Option<FusionTrace>,
    /// Present when the agent cascade ran: the executed graph and the
    /// backend chosen for each node.
    pub agent_graph: Option<crate::graph::AgentGraph>,
    #[serde(default)]
    pub node_backends: Vec<(String, String)>,
    pub intent: Option<IntentResult>,
    /// Present only on text-routed paths; non-text bypasses it.
    pub complexity: Option<ComplexityProfile>,
    pub cost_charged: f64,
    pub simulated_latency_ms: f64,
    /// Wall-clock milliseconds spent on intake + complexity + intent +
    /// selection, before any backend execution.
    pub decision_path_ms: f64,
    pub memory_digest: String,
    pub confidence: f64,
    /// Structured refusal when no feasible route survived the policy.
    pub refusal: Option<String>,
    /// Pipeline stages actually traversed, in order.
    pub stage_trace: Vec<String>,
}

/// The assembled engine with injected state.
pub struct Engine {
    config: EngineConfig,
    pool: BackendPool,
    memory: crate::memory::MemoryStore,
    centroids: CentroidIndex,
    classifier: RuleCompositeClassifier,
    transcriber: Box<dyn AudioTranscriber>,
    tools: ToolRegistry,
    decision_log: Mutex<BTreeMap<String, OriginalOutcome>>,
    feedback_log: Mutex<Vec<FeedbackLogEntry>>,
    run_seed: u64,
}

impl Engine {
    pub fn new(config: EngineConfig, annotations: AnnotationStore) -> Result<Self> {
        config.validate()?;
        let pool = BackendPool::new(config.pool.clone())?;
        let memory = crate::memory::MemoryStore::new(config.memory);
        let centroids = CentroidIndex::build(&config.exemplars)?;
        let classifier = RuleCompositeClassifier::new(config.keywords.clone(), &config.intent);
        let tools = ToolRegistry::bundled(annotations);
        let run_seed = config.run_seed;
        Ok(Self {
            config,
            pool,
            memory,
            centroids,
            classifier,
            transcriber: Box::new(FixtureTranscriber),
            tools,
            decision_log: Mutex::new(BTreeMap::new()),
            feedback_log: Mutex::new(Vec::new()),
            run_seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run_seed = seed;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn pool(&self) -> &BackendPool {
        &self.pool
    }

    pub fn memory(&self) -> &crate::memory::MemoryStore {
        &self.memory
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed
    }

    /// The canonical request text: the query text, else the transcript,
    /// else the attachment names.
    fn canonical_text(query: &Query, intake: &IntakeResult) -> String {
        if query.has_text() {
            return query.text.clone();
        }
        if let Some(t) = &intake.transcript {
            if !t.is_empty() {
                return t.clone();
            }
        }
        query
            .attachments
            .iter()
            .map(|a| a.filename.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Category for non-text and hybrid queries: from the attachment
    /// modality, refined by detector cues in the accompanying text;
    /// multiple distinct attachment modalities make the query complex.
    fn nontext_category(intake: &IntakeResult, text: &str) -> TaskCategory {
        let distinct = intake.attachment_modalities();
        if distinct.len() > 1 {
            return TaskCategory::Complex;
        }
        match distinct.first() {
            Some(Modality::Image) => {
                let detector_cues =
                    ["detect", "count", "find all", "how many", "locate", "bounding"];
                if detector_cues.iter().any(|cue| contains_phrase(text, cue)) {
                    TaskCategory::ObjectDetect
                } else {
                    TaskCategory::Vision
                }
            }
            Some(Modality::Audio) => TaskCategory::Audio,
            Some(Modality::Video) => TaskCategory::Video,
            Some(Modality::Document) => TaskCategory::Document,
            _ => TaskCategory::General,
        }
    }

    /// Full pipeline for one query.
    pub fn handle(&self, query: &Query) -> Result<EngineResponse> {
        self.handle_inner(query, None)
    }

    /// Same pipeline, but the final selection is forced onto `route_id`.
    /// Used by the always-premium replay and the couplet-forcing CLI flag.
    pub fn handle_forced(&self, query: &Query, route_id: &str) -> Result<EngineResponse> {
        self.handle_inner(query, Some(route_id))
    }

    fn handle_inner(&self, query: &Query, forced_route: Option<&str>) -> Result<EngineResponse> {
        let started = Instant::now();
        let mut stage_trace = vec!["intake".to_string()];
        let now = query.arrived_at;

        let intake = classify_intake(query, self.transcriber.as_ref(), &self.config.intake)?;
        let text = Self::canonical_text(query, &intake);

        let mut profile: Option<ComplexityProfile> = None;
        let mut intent: Option<IntentResult> = None;
        let category;
        let decision_result;

        if intake.execution_category == ExecutionCategory::TextOnly {
            stage_trace.push("followup_check".to_string());
            let prior = self.memory.last_interaction(&query.session_id);
            let followup = detect_followup(&text, prior.as_ref(), &self.config.intent);

            stage_trace.push("complexity".to_string());
            let p = complexity(&text, &self.config.keywords, &self.config.complexity)?;

            stage_trace.push("intent".to_string());
            let result = if let Some((target, evidence, confidence)) = followup {
                IntentResult {
                    category: TaskCategory::TextMoe,
                    confidence,
                    stage: match evidence {
                        FollowupEvidence::Anaphora => IntentStage::Keyword,
                        FollowupEvidence::Semantic => IntentStage::Centroid,
                    },
                    is_followup: true,
                    followup_target: Some(target),
                }
            } else {
                classify_intent(
                    &text,
                    &p.signals,
                    &self.config.keywords,
                    &self.centroids,
                    &self.classifier,
                    &self.config.intent,
                )?
            };
            category = result.category;

            stage_trace.push("selection".to_string());
            decision_result = route_text(
                &p,
                category,
                self.config.complexity.tau,
                query.policy,
                &self.config.routes,
                &self.config.routing,
            );
            profile = Some(p);
            intent = Some(result);
        } else {
            category = Self::nontext_category(&intake, &text);
            stage_trace.push("selection".to_string());
            decision_result = route_nontext(
                intake.modality,
                intake.attachment_modalities(),
                category,
                query.policy,
                &self.config.routes,
                &self.config.routing,
            );
        }

        let mut decision = match decision_result {
            Ok(d) => d,
            Err(Error::NoFeasibleRoute) => {
                let decision_path_ms = started.elapsed().as_secs_f64() * 1000.0;
                stage_trace.push("refusal".to_string());
                return Ok(EngineResponse {
                    query_id: query.id.clone(),
                    payload: "request refused: no execution route satisfies the policy"
                        .to_string(),
                    category,
                    modality: intake.modality,
                    execution_category: intake.execution_category,
                    decision: None,
                    fusion: None,
                    agent_graph: None,
                    node_backends: Vec::new(),
                    intent,
                    complexity: profile,
                    cost_charged: 0.0,
                    simulated_latency_ms: 0.0,
                    decision_path_ms,
                    memory_digest: String::new(),
                    confidence: 0.0,
                    refusal: Some("no_feasible_route".to_string()),
                    stage_trace,
                });
            }
            Err(e) => return Err(e),
        };

        if let Some(route_id) = forced_route {
            let route = self
                .config
                .routes
                .iter()
                .find(|r| r.id == route_id)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown forced route {route_id}")))?;
            decision.chosen = route.clone();
            decision.rationale = RouteRationale::DirectSelect;
            decision.utility = 0.0;
        }
        let decision_path_ms = started.elapsed().as_secs_f64() * 1000.0;

        let execution_category = match &intent {
            Some(i) if i.is_followup => ExecutionCategory::FollowUp,
            _ => intake.execution_category,
        };

        stage_trace.push("execution".to_string());
        let executed = self.execute_decision(query, &intake, &decision, category, &text, now)?;

        stage_trace.push("memory".to_string());
        self.memory.record_interaction(
            &query.session_id,
            &query.id,
            &text,
            intake.modality,
            &executed.payload,
            now,
        );

        let tier = self.pool.spec(&decision.chosen.backend_id)?.tier;
        self.pool.note_query(&query.id, tier);
        let cost_charged = self.pool.query_cost(&query.id);

        let outcome = OriginalOutcome {
            query_id: query.id.clone(),
            category,
            modality: intake.modality,
            attachment_modalities: intake.attachment_modalities(),
            policy: query.policy,
            route_id: decision.chosen.id.clone(),
            backend_id: decision.chosen.backend_id.clone(),
            confidence: executed.confidence,
            request: ExecRequest {
                query_id: query.id.clone(),
                category,
                modality: intake.modality,
                text: text.clone(),
                context: String::new(),
            },
        };
        self.decision_log
            .lock()
            .expect("decision log poisoned")
            .insert(query.id.clone(), outcome);

        Ok(EngineResponse {
            query_id: query.id.clone(),
            payload: executed.payload,
            category,
            modality: intake.modality,
            execution_category,
            decision: Some(decision),
            fusion: executed.fusion,
            agent_graph: executed.agent_graph,
            node_backends: executed.node_backends,
            intent,
            complexity: profile,
            cost_charged,
            simulated_latency_ms: executed.latency_ms,
            decision_path_ms,
            memory_digest: executed.memory_digest,
            confidence: executed.confidence,
            refusal: None,
            stage_trace,
        })
    }

    fn execute_decision(
        &self,
        query: &Query,
        intake: &IntakeResult,
        decision: &RoutingDecision,
        category: TaskCategory,
        text: &str,
        now: u64,
    ) -> Result<Executed> {
        match decision.chosen.kind {
            RouteKind::AgentCascade => self.execute_cascade(query, intake, decision, text, now),
            RouteKind::Couplet => self.execute_couplet(query, intake, decision, category, text, now),
            _ => self.execute_single(query, decision, category, intake, text, now),
        }
    }

    fn execute_single(
        &self,
        query: &Query,
        decision: &RoutingDecision,
        category: TaskCategory,
        intake: &IntakeResult,
        text: &str,
        now: u64,
    ) -> Result<Executed> {
        // Follow-ups get the memory slice scoped to the prior modality.
        let scope = self
            .memory
            .last_interaction(&query.session_id)
            .filter(|p| p.modality != Modality::Text)
            .map(|p| p.modality);
        let bundle = self.memory.build_context(
            &query.session_id,
            &embed_text(text),
            intake.modality,
            scope,
            now,
        );
        let request = ExecRequest {
            query_id: query.id.clone(),
            category,
            modality: intake.modality,
            text: text.to_string(),
            context: bundle.render(),
        };
        let seed = derive_seed(self.run_seed, &[&query.id, &decision.chosen.backend_id]);
        let result = self.pool.execute(&decision.chosen.backend_id, &request, seed)?;
        Ok(Executed {
            payload: result.payload,
            confidence: result.confidence,
            latency_ms: result.simulated_latency_ms,
            fusion: None,
            agent_graph: None,
            node_backends: Vec::new(),
            memory_digest: bundle.digest(),
        })
    }

    fn execute_couplet(
        &self,
        query: &Query,
        intake: &IntakeResult,
        decision: &RoutingDecision,
        category: TaskCategory,
        text: &str,
        now: u64,
    ) -> Result<Executed> {
        let target = intake
            .per_attachment
            .iter()
            .find(|d| matches!(d.modality, Modality::Image | Modality::Document))
            .ok_or(Error::NoToolApplicable);
        let (detection, attachment) = match target {
            Ok(d) => (d, &query.attachments[d.index]),
            Err(_) => return self.execute_single(query, decision, category, intake, text, now),
        };
        match couplet_decompose(text, attachment, detection.modality) {
            Ok(task) => {
                let (output, latency) = couplet_run(
                    &task,
                    &self.tools,
                    &self.pool,
                    attachment,
                    &query.id,
                    self.run_seed,
                )?;
                let (payload, confidence) = couplet_compose(&task, &output, text);
                Ok(Executed {
                    payload,
                    confidence,
                    latency_ms: latency,
                    fusion: None,
                    agent_graph: None,
                    node_backends: Vec::new(),
                    memory_digest: String::new(),
                })
            }
            Err(Error::NoToolApplicable) => {
                // Fall back to the modality pipeline route.
                let remaining: Vec<Route> = self
                    .config
                    .routes
                    .iter()
                    .filter(|r| r.kind != RouteKind::Couplet && r.kind != RouteKind::AgentCascade)
                    .cloned()
                    .collect();
                let fallback = route_nontext(
                    intake.modality,
                    intake.attachment_modalities(),
                    category,
                    query.policy,
                    &remaining,
                    &self.config.routing,
                )?;
                self.execute_single(query, &fallback, category, intake, text, now)
            }
            Err(e) => Err(e),
        }
    }

    fn execute_cascade(
        &self,
        query: &Query,
        intake: &IntakeResult,
        decision: &RoutingDecision,
        text: &str,
        now: u64,
    ) -> Result<Executed> {
        let graph = match decompose(text, &intake.per_attachment) {
            Ok(g) => g,
            Err(Error::DecompositionEmpty) => {
                // Single-route premium handling (or the efficient
                // substitute under an open-only policy).
                let kind = if query.policy.premium_allowed() {
                    RouteKind::Premium
                } else {
                    RouteKind::Efficient
                };
                let subset: Vec<Route> = self
                    .config
                    .routes
                    .iter()
                    .filter(|r| r.kind == kind)
                    .cloned()
                    .collect();
                let ctx = crate::planner::RouteQuery {
                    modality: Modality::Text,
                    attachment_modalities: vec![],
                    category: TaskCategory::Complex,
                    policy: query.policy,
                };
                let fallback =
                    crate::planner::select_route(&ctx, &subset, &self.config.routing)?;
                return self.execute_single(
                    query,
                    &fallback,
                    TaskCategory::Complex,
                    intake,
                    text,
                    now,
                );
            }
            Err(e) => return Err(e),
        };

        // Planner coordination call, charged to the cascade's backend.
        let planner_request = ExecRequest {
            query_id: query.id.clone(),
            category: TaskCategory::Complex,
            modality: intake.modality,
            text: format!("plan {} subtasks for: {text}", graph.nodes.len()),
            context: String::new(),
        };
        let planner_seed =
            derive_seed(self.run_seed, &[&query.id, &decision.chosen.backend_id, "plan"]);
        let planner_call =
            self.pool
                .execute(&decision.chosen.backend_id, &planner_request, planner_seed)?;

        // Scoped memory slice per node.
        let query_embedding = embed_text(text);
        let mut memory_slices = BTreeMap::new();
        for node in &graph.nodes {
            let bundle = self.memory.build_context(
                &query.session_id,
                &query_embedding,
                node.modality,
                Some(node.modality),
                now,
            );
            if !bundle.is_empty() {
                memory_slices.insert(node.node_id.clone(), bundle.render());
            }
        }

        let params = GraphRunParams {
            pool: &self.pool,
            routes: &self.config.routes,
            weights: &self.config.routing,
            policy: query.policy,
            run_seed: self.run_seed,
            query_id: &query.id,
            memory_slices: &memory_slices,
            order_hint: None,
        };
        let execution = execute_graph(&graph, &params)?;
        let trace = fuse(&execution.outputs, &execution.signals, &self.config.fusion)?;
        let confidence = trace
            .components
            .iter()
            .zip(&execution.outputs)
            .map(|(c, o)| c.weight * o.confidence)
            .sum();
        Ok(Executed {
            payload: trace.payload.clone(),
            confidence,
            latency_ms: planner_call.simulated_latency_ms + execution.critical_path_ms,
            fusion: Some(trace),
            agent_graph: Some(graph),
            node_backends: execution.node_backends,
            memory_digest: String::new(),
        })
    }

    /// Handles one feedback event against a logged decision, appending
    /// the outcome (retry record or no-retry reason) to the feedback log.
    pub fn feedback(&self, event: &FeedbackEvent) -> Result<FeedbackLogEntry> {
        let original = {
            let log = self.decision_log.lock().expect("decision log poisoned");
            log.get(&event.query_id)
                .cloned()
                .ok_or_else(|| Error::UnknownQuery(event.query_id.clone()))?
        };
        let outcome = match handle_feedback(
            event,
            &original,
            &self.config.routes,
            &self.config.routing,
            &self.pool,
            self.run_seed,
        ) {
            Ok(record) => FeedbackOutcome::Retried(Box::new(record)),
            Err(Error::NoAlternativeRoute) => {
                FeedbackOutcome::NoRetry { reason: "no_alternative_route".to_string() }
            }
            Err(e) => return Err(e),
        };
        let entry = FeedbackLogEntry {
            event: event.clone(),
            category: original.category,
            original_route: original.route_id.clone(),
            outcome,
        };
        self.feedback_log.lock().expect("feedback log poisoned").push(entry.clone());
        Ok(entry)
    }

    pub fn feedback_log(&self) -> Vec<FeedbackLogEntry> {
        self.feedback_log.lock().expect("feedback log poisoned").clone()
    }

    pub fn decision_outcomes(&self) -> Vec<OriginalOutcome> {
        self.decision_log
            .lock()
            .expect("decision log poisoned")
            .values()
            .cloned()
            .collect()
    }

    /// Restores a previously logged decision (for cross-process feedback).
    pub fn restore_decision(&self, outcome: OriginalOutcome) {
        self.decision_log
            .lock()
            .expect("decision log poisoned")
            .insert(outcome.query_id.clone(), outcome);
    }
}

struct Executed {
    payload: String,
    confidence: f64,
    latency_ms: f64,
    fusion: Option<FusionTrace>,
    agent_graph: Option<crate::graph::AgentGraph>,
    node_backends: Vec<(String, String)>,
    memory_digest: String,
}
