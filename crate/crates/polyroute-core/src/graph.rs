//! Agent graph: decomposition of complex queries into a DAG of
//! (modality, capability, dependencies) nodes, dependency-respecting
//! execution against the backend pool, and mixture-of-experts fusion of
//! the component outputs.
//!
//! Decomposition creates one node per attachment plus one node per
//! sequenced text subtask; edges point from earlier-produced artifacts to
//! their consumers, so the graph is acyclic by construction. Execution is
//! content-deterministic under any legal schedule because every node's
//! seed derives from (run seed, query id, node id) alone. Fusion converts
//! per-component relevance scores into softmax weights, with a dominance
//! shortcut when one component overwhelms the rest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{derive_seed, BackendPool, ExecRequest, SplitMix64};
use crate::intake::AttachmentDetection;
use crate::intent::split_subtasks;
use crate::model::{
    contains_phrase, embed_text, fnv1a64, EmbeddingVector, Modality, TaskCategory, UserPolicy,
    EMBED_DIM,
};
use crate::planner::{score_route, select_route, Route, RouteKind, RouteQuery, RoutingWeights};
use crate::{Error, Result};

/// The fixed capability vocabulary agents can be asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Summarize,
    DetectObjects,
    Transcribe,
    ParseTable,
    Reason,
    Generate,
    ExtractStructure,
}

impl Capability {
    /// Task category used for backend affinity when routing a node.
    pub fn category(self) -> TaskCategory {
        match self {
            Capability::Summarize => TaskCategory::SummarizationWriting,
            Capability::DetectObjects => TaskCategory::ObjectDetect,
            Capability::Transcribe => TaskCategory::Audio,
            Capability::ParseTable | Capability::ExtractStructure => TaskCategory::Document,
            Capability::Reason | Capability::Generate => TaskCategory::General,
        }
    }

    fn is_perception(self) -> bool {
        matches!(
            self,
            Capability::Transcribe
                | Capability::DetectObjects
                | Capability::ParseTable
                | Capability::ExtractStructure
        )
    }
}

/// One agent node: the modality handler, the capability invoked, and the
/// upstream nodes whose outputs it consumes. `brief` carries the node's
/// own slice of the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNode {
    pub node_id: String,
    pub modality: Modality,
    pub capability: Capability,
    pub deps: Vec<String>,
    pub brief: String,
}

/// The execution DAG for one complex query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentGraph {
    pub nodes: Vec<AgentNode>,
}

impl AgentGraph {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::DecompositionEmpty);
        }
        for node in &self.nodes {
            for dep in &node.deps {
                if dep == &node.node_id {
                    return Err(Error::InvalidConfig(format!(
                        "node {} depends on itself",
                        node.node_id
                    )));
                }
                if !self.nodes.iter().any(|n| &n.node_id == dep) {
                    return Err(Error::InvalidConfig(format!(
                        "node {} depends on unknown node {dep}",
                        node.node_id
                    )));
                }
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Indices in a valid topological order; errors when a cycle exists.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let index_of: BTreeMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.node_id.as_str(), i)).collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            let target = index_of[node.node_id.as_str()];
            indegree[target] = node.deps.len();
        }
        let mut ready: Vec<usize> =
            (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(next) = ready.pop() {
            order.push(next);
            let id = self.nodes[next].node_id.clone();
            for (i, node) in self.nodes.iter().enumerate() {
                if node.deps.contains(&id) {
                    indegree[i] -= 1;
                    if indegree[i] == 0 {
                        ready.push(i);
                    }
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(Error::InvalidConfig("agent graph contains a cycle".into()));
        }
        Ok(order)
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.deps.iter().map(|d| (d.clone(), n.node_id.clone())))
            .collect()
    }
}

/// Output of one executed node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentOutput {
    pub node_id: String,
    pub payload: String,
    pub modality: Modality,
    pub confidence: f64,
    pub latent: Option<EmbeddingVector>,
}

const MODALITY_MENTIONS: [(&str, Modality); 18] = [
    ("audio", Modality::Audio),
    ("recording", Modality::Audio),
    ("transcript", Modality::Audio),
    ("speech", Modality::Audio),
    ("image", Modality::Image),
    ("photo", Modality::Image),
    ("picture", Modality::Image),
    ("chart", Modality::Image),
    ("scan", Modality::Image),
    ("diagram", Modality::Image),
    ("screenshot", Modality::Image),
    ("document", Modality::Document),
    ("table", Modality::Document),
    ("report", Modality::Document),
    ("pdf", Modality::Document),
    ("spreadsheet", Modality::Document),
    ("video", Modality::Video),
    ("clip", Modality::Video),
];

const REFERENCE_LEXICON: [&str; 12] = [
    "it",
    "them",
    "its",
    "this",
    "that",
    "the result",
    "the output",
    "the summary",
    "the transcript",
    "the labels",
    "the totals",
    "the text",
];

fn default_capability(modality: Modality) -> Capability {
    match modality {
        Modality::Audio => Capability::Transcribe,
        Modality::Image => Capability::DetectObjects,
        Modality::Document => Capability::ExtractStructure,
        Modality::Video => Capability::Summarize,
        Modality::Text | Modality::Multimodal => Capability::Reason,
    }
}

fn segment_capability(segment: &str) -> Capability {
    let rules: [(&[&str], Capability); 6] = [
        (&["transcribe"], Capability::Transcribe),
        (&["summarize", "summary", "condense", "shorten"], Capability::Summarize),
        (&["detect", "count", "find all", "label"], Capability::DetectObjects),
        (&["table", "spreadsheet", "csv"], Capability::ParseTable),
        (&["extract", "structure"], Capability::ExtractStructure),
        (&["write", "generate", "draw", "create", "compose", "chart", "translate"], Capability::Generate),
    ];
    for (cues, capability) in rules {
        if cues.iter().any(|cue| contains_phrase(segment, cue)) {
            return capability;
        }
    }
    Capability::Reason
}

fn mentioned_modalities(segment: &str) -> Vec<Modality> {
    let mut found: Vec<Modality> = MODALITY_MENTIONS
        .iter()
        .filter(|(word, _)| contains_phrase(segment, word))
        .map(|(_, m)| *m)
        .collect();
    found.sort();
    found.dedup();
    found
}

fn references_prior_product(segment: &str) -> bool {
    REFERENCE_LEXICON.iter().any(|phrase| contains_phrase(segment, phrase))
}

/// Decomposes a query into its agent graph: one node per attachment plus
/// one node per sequenced text subtask. A perception-style subtask aimed
/// at exactly one attachment binds to that attachment's node instead of
/// creating a new one; other subtasks become text nodes whose edges come
/// from modality mentions (consuming an attachment's product) or the
/// reference lexicon (consuming the previous subtask's product).
pub fn decompose(text: &str, attachments: &[AttachmentDetection]) -> Result<AgentGraph> {
    let mut nodes: Vec<AgentNode> = attachments
        .iter()
        .map(|d| AgentNode {
            node_id: format!("a{}", d.index),
            modality: d.modality,
            capability: default_capability(d.modality),
            deps: Vec::new(),
            brief: d.filename.clone(),
        })
        .collect();
    let attachment_count = nodes.len();
    let mut bound: Vec<bool> = vec![false; attachment_count];

    let mut segments = split_subtasks(text);
    if segments.is_empty() && !text.trim().is_empty() {
        segments.push(text.to_lowercase());
    }

    let mut last_node_id: Option<String> = None;
    let mut text_counter = 0usize;
    for segment in &segments {
        let capability = segment_capability(segment);
        let targets: Vec<usize> = {
            let mentioned = mentioned_modalities(segment);
            (0..attachment_count)
                .filter(|&i| mentioned.contains(&nodes[i].modality))
                .collect()
        };

        // A perception subtask aimed at one attachment becomes that
        // attachment's capability rather than a separate node.
        if targets.len() == 1 && capability.is_perception() && !bound[targets[0]] {
            let i = targets[0];
            nodes[i].capability = capability;
            nodes[i].brief = segment.clone();
            bound[i] = true;
            last_node_id = Some(nodes[i].node_id.clone());
            continue;
        }
        // A lone referential question against a single attachment stays
        // on that attachment's node ("what is in it?").
        if targets.is_empty()
            && attachment_count == 1
            && segments.len() == 1
            && references_prior_product(segment)
        {
            nodes[0].brief = segment.clone();
            if capability != Capability::Reason {
                nodes[0].capability = capability;
            }
            bound[0] = true;
            last_node_id = Some(nodes[0].node_id.clone());
            continue;
        }

        let mut deps: Vec<String> =
            targets.iter().map(|&i| nodes[i].node_id.clone()).collect();
        if deps.is_empty() && references_prior_product(segment) {
            match &last_node_id {
                Some(prev) => deps.push(prev.clone()),
                None => {
                    deps = nodes[..attachment_count]
                        .iter()
                        .map(|n| n.node_id.clone())
                        .collect()
                }
            }
        }
        let node_id = format!("t{text_counter}");
        text_counter += 1;
        nodes.push(AgentNode {
            node_id: node_id.clone(),
            modality: Modality::Text,
            capability,
            deps,
            brief: segment.clone(),
        });
        last_node_id = Some(node_id);
    }

    let graph = AgentGraph { nodes };
    if graph.nodes.is_empty() {
        return Err(Error::DecompositionEmpty);
    }
    graph.validate()?;
    Ok(graph)
}

/// Per-node routing signals captured during execution, reused by fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSignal {
    pub modality_align: f64,
    pub task_affinity: f64,
}

/// Everything execute_graph produces: outputs in node order, the fusion
/// signals, per-node backend choices, soft failures, and the critical
/// path latency.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphExecution {
    pub outputs: Vec<ComponentOutput>,
    pub signals: Vec<NodeSignal>,
    pub node_backends: Vec<(String, String)>,
    /// Nodes whose call failed even after the one-shot fallback retry.
    pub soft_failures: Vec<(String, String)>,
    pub critical_path_ms: f64,
    pub total_cost: f64,
}

/// Execution parameters shared by every node of one run.
pub struct GraphRunParams<'a> {
    pub pool: &'a BackendPool,
    pub routes: &'a [Route],
    pub weights: &'a RoutingWeights,
    pub policy: UserPolicy,
    pub run_seed: u64,
    pub query_id: &'a str,
    /// Scoped memory slice per node id; absent entries mean no context.
    pub memory_slices: &'a BTreeMap<String, String>,
    /// Optional scheduling priority (node indices); used to prove content
    /// is schedule independent. Ready nodes are executed lowest-priority
    /// value first.
    pub order_hint: Option<&'a [usize]>,
}

/// Runs every node after its dependencies, dispatching each to the best
/// non-cascade route for its (modality, capability). Output content is
/// deterministic for a fixed seed regardless of schedule; outputs are
/// collected in node order. A node whose call fails is retried once on
/// the next-best route; a second failure is recorded and the low-quality
/// output kept.
pub fn execute_graph(graph: &AgentGraph, params: &GraphRunParams<'_>) -> Result<GraphExecution> {
    graph.validate()?;
    let n = graph.nodes.len();
    let priority: Vec<usize> = match params.order_hint {
        Some(hint) if hint.len() == n => hint.to_vec(),
        _ => (0..n).collect(),
    };

    let candidates: Vec<Route> = params
        .routes
        .iter()
        .filter(|r| r.kind != RouteKind::AgentCascade)
        .cloned()
        .collect();

    let mut done: Vec<bool> = vec![false; n];
    let mut outputs: Vec<Option<ComponentOutput>> = vec![None; n];
    let mut signals: Vec<Option<NodeSignal>> = vec![None; n];
    let mut node_backends = Vec::with_capacity(n);
    let mut soft_failures = Vec::new();
    let mut finish_ms: Vec<f64> = vec![0.0; n];
    let mut total_cost = 0.0;

    for _ in 0..n {
        let mut ready: Vec<usize> = (0..n)
            .filter(|&i| {
                !done[i]
                    && graph.nodes[i].deps.iter().all(|d| {
                        let j = graph.nodes.iter().position(|x| &x.node_id == d).unwrap();
                        done[j]
                    })
            })
            .collect();
        ready.sort_by_key(|&i| priority[i]);
        let i = *ready.first().expect("acyclic graph always has a ready node");
        let node = &graph.nodes[i];

        let ctx = RouteQuery {
            modality: node.modality,
            attachment_modalities: vec![node.modality],
            category: node.capability.category(),
            policy: params.policy,
        };
        let decision = select_route(&ctx, &candidates, params.weights)?;
        let chosen_score = score_route(&ctx, &decision.chosen, params.weights);

        let mut context = String::new();
        let mut dep_finish: f64 = 0.0;
        for dep in &node.deps {
            let j = graph.nodes.iter().position(|x| &x.node_id == dep).unwrap();
            let dep_out = outputs[j].as_ref().expect("dependency executed before consumer");
            context.push_str(&dep_out.payload);
            context.push('\n');
            dep_finish = dep_finish.max(finish_ms[j]);
        }
        if let Some(slice) = params.memory_slices.get(&node.node_id) {
            context.push_str(slice);
        }

        let request = ExecRequest {
            query_id: params.query_id.to_string(),
            category: node.capability.category(),
            modality: node.modality,
            text: node.brief.clone(),
            context,
        };
        let seed = derive_seed(params.run_seed, &[params.query_id, &node.node_id, &decision.chosen.backend_id]);
        let mut result = params.pool.execute(&decision.chosen.backend_id, &request, seed)?;
        let mut backend_used = decision.chosen.backend_id.clone();
        let mut latency = result.simulated_latency_ms;
        total_cost += result.cost_charged;

        if !result.success {
            // One-shot fallback: next-best route, excluding the one that failed.
            let remaining: Vec<Route> = candidates
                .iter()
                .filter(|r| r.id != decision.chosen.id)
                .cloned()
                .collect();
            if let Ok(retry_decision) = select_route(&ctx, &remaining, params.weights) {
                let retry_seed = derive_seed(
                    params.run_seed,
                    &[params.query_id, &node.node_id, &retry_decision.chosen.backend_id, "retry"],
                );
                let retry =
                    params.pool.execute(&retry_decision.chosen.backend_id, &request, retry_seed)?;
                latency += retry.simulated_latency_ms;
                total_cost += retry.cost_charged;
                if retry.success {
                    backend_used = retry_decision.chosen.backend_id.clone();
                    result = retry;
                } else {
                    soft_failures
                        .push((node.node_id.clone(), "failed after fallback retry".to_string()));
                    result = retry;
                    backend_used = retry_decision.chosen.backend_id.clone();
                }
            } else {
                soft_failures.push((node.node_id.clone(), "no fallback route".to_string()));
            }
        }

        finish_ms[i] = dep_finish + latency;
        let latent = modality_adapter(&embed_text(&result.payload), node.modality);
        outputs[i] = Some(ComponentOutput {
            node_id: node.node_id.clone(),
            payload: result.payload,
            modality: node.modality,
            confidence: result.confidence,
            latent: Some(latent),
        });
        signals[i] = Some(NodeSignal {
            modality_align: chosen_score.s_m,
            task_affinity: chosen_score.s_t,
        });
        node_backends.push((node.node_id.clone(), backend_used));
        done[i] = true;
    }

    let critical_path_ms = finish_ms.iter().copied().fold(0.0, f64::max);
    Ok(GraphExecution {
        outputs: outputs.into_iter().map(|o| o.unwrap()).collect(),
        signals: signals.into_iter().map(|s| s.unwrap()).collect(),
        node_backends,
        soft_failures,
        critical_path_ms,
        total_cost,
    })
}

/// Maps a component latent into the shared fusion space: a fixed,
/// modality-keyed signed permutation of the coordinates. Orthogonal, so
/// norms survive and the convexity invariant on the fused latent holds.
pub fn modality_adapter(latent: &EmbeddingVector, modality: Modality) -> EmbeddingVector {
    let seed = fnv1a64(modality.as_str().as_bytes(), 0x9e37_79b9_7f4a_7c15);
    let shift = (seed % EMBED_DIM as u64) as usize;
    let mut rng = SplitMix64::new(seed);
    let mut out = vec![0.0f64; EMBED_DIM];
    for (i, &x) in latent.components().iter().enumerate() {
        let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        out[(i + shift) % EMBED_DIM] = sign * x;
    }
    // Signed permutations preserve the norm; skip re-normalization.
    EmbeddingVector::from_raw(out)
}

/// Fusion coefficients for the relevance score
/// s_i = alpha_m * S_m + alpha_t * S_t + alpha_c * conf_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionCoefficients {
    pub alpha_m: f64,
    pub alpha_t: f64,
    pub alpha_c: f64,
    /// Softmax weight at or above which one component is returned alone.
    pub dominance_threshold: f64,
}

impl Default for FusionCoefficients {
    fn default() -> Self {
        Self { alpha_m: 0.4, alpha_t: 0.3, alpha_c: 0.3, dominance_threshold: 0.75 }
    }
}

impl FusionCoefficients {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_m < 0.0 || self.alpha_t < 0.0 || self.alpha_c < 0.0 {
            return Err(Error::InvalidConfig("fusion coefficients must be non-negative".into()));
        }
        if self.alpha_m + self.alpha_t + self.alpha_c <= 0.0 {
            return Err(Error::InvalidConfig("fusion coefficients must not all be zero".into()));
        }
        if !(0.0..=1.0).contains(&self.dominance_threshold) {
            return Err(Error::InvalidConfig("dominance threshold must be in [0,1]".into()));
        }
        Ok(())
    }

    /// Coefficients rescaled to sum to one, keeping s_i in [0,1].
    fn normalized(&self) -> (f64, f64, f64) {
        let sum = self.alpha_m + self.alpha_t + self.alpha_c;
        (self.alpha_m / sum, self.alpha_t / sum, self.alpha_c / sum)
    }
}

/// Per-component entry of a fusion trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionComponent {
    pub node_id: String,
    pub relevance: f64,
    pub weight: f64,
}

/// The audited fusion record: relevances, softmax weights, the fused
/// latent, whether dominance short-circuited, and the final payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionTrace {
    pub components: Vec<FusionComponent>,
    pub fused_latent: EmbeddingVector,
    pub dominance_applied: bool,
    pub payload: String,
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn payload_summary(payload: &str) -> &str {
    let end = payload
        .char_indices()
        .take_while(|(i, _)| *i < 160)
        .last()
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    &payload[..end]
}

/// Softmax-weighted mixture of component outputs. When the top weight
/// reaches the dominance threshold that component's payload is returned
/// directly; otherwise the final payload is the weight-annotated
/// composition in descending-weight order, and the fused latent is the
/// convex combination of the component latents.
pub fn fuse(
    outputs: &[ComponentOutput],
    signals: &[NodeSignal],
    coeffs: &FusionCoefficients,
) -> Result<FusionTrace> {
    if outputs.is_empty() {
        return Err(Error::EmptyOutputs);
    }
    coeffs.validate()?;
    debug_assert_eq!(outputs.len(), signals.len());
    let (am, at, ac) = coeffs.normalized();
    let relevance: Vec<f64> = outputs
        .iter()
        .zip(signals)
        .map(|(o, s)| am * s.modality_align + at * s.task_affinity + ac * o.confidence)
        .collect();
    let weights = softmax(&relevance);

    let mut fused = vec![0.0f64; EMBED_DIM];
    for (output, &w) in outputs.iter().zip(&weights) {
        if let Some(latent) = &output.latent {
            for (slot, x) in fused.iter_mut().zip(latent.components()) {
                *slot += w * x;
            }
        }
    }
    let fused_latent = EmbeddingVector::from_raw(fused);

    let mut order: Vec<usize> = (0..outputs.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b))
    });
    let top = order[0];
    let dominance_applied = weights[top] >= coeffs.dominance_threshold;
    let payload = if dominance_applied {
        outputs[top].payload.clone()
    } else {
        order
            .iter()
            .map(|&i| format!("[w={:.3}] {}", weights[i], payload_summary(&outputs[i].payload)))
            .collect::<Vec<_>>()
            .join(" | ")
    };

    Ok(FusionTrace {
        components: outputs
            .iter()
            .enumerate()
            .map(|(i, o)| FusionComponent {
                node_id: o.node_id.clone(),
                relevance: relevance[i],
                weight: weights[i],
            })
            .collect(),
        fused_latent,
        dominance_applied,
        payload,
    })
}
