//! Cost-aware multimodal query routing engine.
//!
//! The engine classifies each incoming query by modality, complexity, and
//! intent, then selects the utility-maximizing execution route from a
//! configurable backend pool. Simple text goes to efficient open-tier
//! models; hard or policy-flagged text escalates to the premium tier;
//! non-text inputs dispatch straight to modality pipelines; complex or
//! ambiguous requests are decomposed into an agent graph whose component
//! outputs are fused with softmax-weighted mixture-of-experts aggregation.
//!
//! Everything is deterministic for a fixed seed: backends are simulated
//! from cost/latency/quality profiles, so whole evaluation runs replay
//! byte-identically.
//!
//! Module map:
//!
//! - [`model`]: shared domain types (queries, modalities, policies, embeddings)
//! - [`intake`]: attachment detection and the modality decision tree
//! - [`complexity`]: complexity features, scalar score, threshold calibration
//! - [`intent`]: the four-stage intent cascade and follow-up detection
//! - [`planner`]: routing objective, policy filtering, route selection
//! - [`backend`]: simulated backend pool and cost ledger
//! - [`graph`]: agent-graph decomposition, execution, and MoE fusion
//! - [`couplet`]: decompose / tool-execute / compose perception pipeline
//! - [`memory`]: layered session memory and context scoring
//! - [`feedback`]: fallback re-execution and reroute on reported errors
//! - [`engine`]: end-to-end composition and the one-call entry point
//! - [`eval`]: corpus evaluation harness, metrics, sweeps
//! - [`corpus`]: bundled labeled corpus generator and fixtures
//! - [`config`]: engine configuration with bundled defaults

pub mod backend;
pub mod complexity;
pub mod config;
pub mod corpus;
pub mod couplet;
pub mod engine;
pub mod eval;
pub mod feedback;
pub mod graph;
pub mod intake;
pub mod intent;
pub mod memory;
pub mod model;
pub mod planner;

use thiserror::Error;

/// Errors surfaced by the routing engine and its modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("attachment `{filename}` not recognized by mime, extension, or content analysis")]
    UnrecognizedAttachment { filename: String },
    #[error("transcriber failed on attachment `{filename}`: {reason}")]
    TranscriberFailure { filename: String, reason: String },
    #[error("query has no text for the requested operation")]
    EmptyText,
    #[error("query `{0}` violates its construction invariants: {1}")]
    InvalidQuery(String, String),
    #[error("no feasible route after policy exclusion")]
    NoFeasibleRoute,
    #[error("backend `{0}` is not registered in the pool")]
    UnknownBackend(String),
    #[error("agent graph decomposition produced no nodes")]
    DecompositionEmpty,
    #[error("agent node `{node_id}` failed after fallback: {reason}")]
    NodeFailure { node_id: String, reason: String },
    #[error("fusion received no component outputs")]
    EmptyOutputs,
    #[error("no perception tool applicable to the request")]
    NoToolApplicable,
    #[error("tool `{tool}` failed: {reason}")]
    ToolFailure { tool: String, reason: String },
    #[error("query `{0}` not found in the decision log")]
    UnknownQuery(String),
    #[error("no alternative route available for retry")]
    NoAlternativeRoute,
    #[error("label lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("corpus record {index}: {reason}")]
    CorpusError { index: usize, reason: String },
    #[error("configuration invalid: {0}")]
    InvalidConfig(String),
    #[error("unknown name `{0}` for enum {1}")]
    UnknownName(String, &'static str),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
