//! Couplet pipeline: rule-based decomposition of a perception request
//! into a structured tool task, execution of a registered traditional
//! tool, and template-based composition of the user-facing answer.
//!
//! The bundled tools are deterministic stubs that read annotation
//! fixtures keyed by attachment content digest (FNV-1a 64, lowercase
//! hex, see [`crate::model::content_digest`]); real detectors, OCR, or
//! taggers plug in behind the same registry without touching the flow.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{derive_seed, BackendPool, ExecRequest};
use crate::model::{contains_phrase, Attachment, Modality, TaskCategory};
use crate::{Error, Result};

/// The three bundled perception tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionTool {
    ObjectDetector,
    Ocr,
    SemanticTagger,
}

impl PerceptionTool {
    pub fn as_str(self) -> &'static str {
        match self {
            PerceptionTool::ObjectDetector => "object_detector",
            PerceptionTool::Ocr => "ocr",
            PerceptionTool::SemanticTagger => "semantic_tagger",
        }
    }
}

/// A structured task extracted from the natural-language request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredTask {
    pub tool: PerceptionTool,
    pub parameters: BTreeMap<String, String>,
    /// Filename of the attachment the task operates on.
    pub source_attachment: String,
}

impl StructuredTask {
    pub fn validate(&self) -> Result<()> {
        match self.tool {
            PerceptionTool::ObjectDetector => {
                if !self.parameters.contains_key("confidence_floor") {
                    return Err(Error::InvalidConfig(
                        "object_detector task needs a confidence_floor parameter".into(),
                    ));
                }
            }
            PerceptionTool::SemanticTagger => {
                if !self.parameters.contains_key("label_set") {
                    return Err(Error::InvalidConfig(
                        "semantic_tagger task needs a label_set parameter".into(),
                    ));
                }
            }
            PerceptionTool::Ocr => {}
        }
        Ok(())
    }
}

/// Bounding region in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

/// One record a tool emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRecord {
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Character span for text-bearing tools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

/// Raw tool output: records as the tool produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolOutput {
    pub tool: PerceptionTool,
    pub records: Vec<ToolRecord>,
}

/// Fixture annotations keyed by attachment content digest, then by tool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStore {
    pub by_digest: BTreeMap<String, BTreeMap<PerceptionTool, Vec<ToolRecord>>>,
}

impl AnnotationStore {
    pub fn lookup(&self, digest: &str, tool: PerceptionTool) -> Vec<ToolRecord> {
        self.by_digest
            .get(digest)
            .and_then(|tools| tools.get(&tool))
            .cloned()
            .unwrap_or_default()
    }
}

/// Registry binding each tool to a pool backend (for cost and latency)
/// and the annotation fixtures it reads.
#[derive(Debug, Clone)]
pub struct ToolRegistry {
    pub backends: BTreeMap<PerceptionTool, String>,
    pub annotations: AnnotationStore,
}

impl ToolRegistry {
    pub fn bundled(annotations: AnnotationStore) -> Self {
        let mut backends = BTreeMap::new();
        backends.insert(PerceptionTool::ObjectDetector, "tool-detector".to_string());
        backends.insert(PerceptionTool::Ocr, "tool-ocr".to_string());
        backends.insert(PerceptionTool::SemanticTagger, "tool-tagger".to_string());
        Self { backends, annotations }
    }
}

pub const DEFAULT_CONFIDENCE_FLOOR: f64 = 0.25;
pub const DEFAULT_LABEL_SET: &str = "object,person,scene,text,animal,vehicle";

const DETECTOR_CUES: [&str; 6] =
    ["detect", "count", "find all", "how many", "locate", "bounding"];
const OCR_CUES: [&str; 6] =
    ["read the text", "extract the text", "read text", "extract text", "ocr", "what does it say"];
const TAGGER_CUES: [&str; 5] = ["describe", "classify", "tag", "what kind", "categorize"];

/// Maps the request to one tool via keyword cues, filling parameter
/// defaults. Errors with `NoToolApplicable` when no cue matches, which
/// signals fallback to the vision pipeline route.
pub fn couplet_decompose(
    query_text: &str,
    attachment: &Attachment,
    attachment_modality: Modality,
) -> Result<StructuredTask> {
    if !matches!(attachment_modality, Modality::Image | Modality::Document) {
        return Err(Error::NoToolApplicable);
    }
    let tool = if DETECTOR_CUES.iter().any(|cue| contains_phrase(query_text, cue)) {
        PerceptionTool::ObjectDetector
    } else if OCR_CUES.iter().any(|cue| contains_phrase(query_text, cue)) {
        PerceptionTool::Ocr
    } else if TAGGER_CUES.iter().any(|cue| contains_phrase(query_text, cue)) {
        PerceptionTool::SemanticTagger
    } else {
        return Err(Error::NoToolApplicable);
    };
    let mut parameters = BTreeMap::new();
    match tool {
        PerceptionTool::ObjectDetector => {
            parameters
                .insert("confidence_floor".to_string(), DEFAULT_CONFIDENCE_FLOOR.to_string());
        }
        PerceptionTool::SemanticTagger => {
            parameters.insert("label_set".to_string(), DEFAULT_LABEL_SET.to_string());
        }
        PerceptionTool::Ocr => {}
    }
    let task =
        StructuredTask { tool, parameters, source_attachment: attachment.filename.clone() };
    task.validate()?;
    Ok(task)
}

/// Executes the registered tool against the attachment: charges the tool
/// backend through the pool, reads the fixture records for the content
/// digest, and applies the detector's confidence floor. Records are
/// otherwise returned unmodified; an unannotated attachment yields empty
/// records, which is a success.
pub fn couplet_run(
    task: &StructuredTask,
    registry: &ToolRegistry,
    pool: &BackendPool,
    attachment: &Attachment,
    query_id: &str,
    run_seed: u64,
) -> Result<(ToolOutput, f64)> {
    task.validate()?;
    let backend_id = registry.backends.get(&task.tool).ok_or_else(|| Error::ToolFailure {
        tool: task.tool.as_str().to_string(),
        reason: "tool not registered".to_string(),
    })?;
    let request = ExecRequest {
        query_id: query_id.to_string(),
        category: TaskCategory::ObjectDetect,
        modality: Modality::Image,
        text: format!("{} {}", task.tool.as_str(), task.source_attachment),
        context: String::new(),
    };
    let seed = derive_seed(run_seed, &[query_id, backend_id, task.tool.as_str()]);
    let call = pool.execute(backend_id, &request, seed).map_err(|e| Error::ToolFailure {
        tool: task.tool.as_str().to_string(),
        reason: e.to_string(),
    })?;

    let mut records = registry.annotations.lookup(&attachment.digest(), task.tool);
    if task.tool == PerceptionTool::ObjectDetector {
        let floor: f64 = task
            .parameters
            .get("confidence_floor")
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_CONFIDENCE_FLOOR);
        records.retain(|r| r.score >= floor);
    }
    Ok((ToolOutput { tool: task.tool, records }, call.simulated_latency_ms))
}

/// Renders tool records into a user-facing response. Records are named
/// in descending-score order and never paraphrased, so every label in
/// the response text exists in the output. Confidence is the arithmetic
/// mean of the surviving record scores; empty records produce an
/// explicit nothing-detected response at confidence zero.
pub fn couplet_compose(
    task: &StructuredTask,
    output: &ToolOutput,
    query_text: &str,
) -> (String, f64) {
    if output.records.is_empty() {
        return (
            format!("In response to '{query_text}': nothing detected in {}.", task.source_attachment),
            0.0,
        );
    }
    let mut records = output.records.clone();
    records.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then(a.label.cmp(&b.label)));
    let listed = records
        .iter()
        .map(|r| format!("{} ({:.2})", r.label, r.score))
        .collect::<Vec<_>>()
        .join(", ");
    let confidence = records.iter().map(|r| r.score).sum::<f64>() / records.len() as f64;
    let body = match (output.tool, records.len()) {
        (PerceptionTool::ObjectDetector, 1) => format!("detected 1 object: {listed}"),
        (PerceptionTool::ObjectDetector, n) => format!("detected {n} objects: {listed}"),
        (PerceptionTool::Ocr, _) => format!("extracted text: {listed}"),
        (PerceptionTool::SemanticTagger, 1) => format!("tagged 1 label: {listed}"),
        (PerceptionTool::SemanticTagger, _) => format!("tagged labels: {listed}"),
    };
    (format!("In response to '{query_text}': {body}."), confidence)
}
