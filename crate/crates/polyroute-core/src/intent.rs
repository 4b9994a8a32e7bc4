//! Four-stage intent cascade: keyword filter, structural analysis, a
//! pluggable classifier, and the semantic centroid mapper, plus follow-up
//! detection against session history.
//!
//! Stages run strictly in order and the first one whose confidence clears
//! its threshold wins, so a keyword hit always preempts centroid
//! assignment. Multi-subtask or multi-intent queries short-circuit to
//! `complex`; when nothing clears, the result is `ambiguous`. The
//! `text_moe` category is assigned only by follow-up detection, never by
//! similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complexity::{KeywordDictionary, StructuralSignal};
use crate::model::{
    contains_phrase, cosine, embed_text, EmbeddingVector, Modality, TaskCategory,
};
use crate::{Error, Result};

/// Nearest-centroid index: one normalized mean embedding per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidIndex {
    pub centroids: BTreeMap<TaskCategory, Centroid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub vector: EmbeddingVector,
    pub exemplar_count: usize,
}

impl CentroidIndex {
    /// Builds centroids as the L2-normalized mean of exemplar embeddings.
    /// Every provided category needs at least one exemplar.
    pub fn build(exemplars: &BTreeMap<TaskCategory, Vec<String>>) -> Result<Self> {
        let mut centroids = BTreeMap::new();
        for (category, texts) in exemplars {
            if texts.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "centroid for {category} needs at least one exemplar"
                )));
            }
            let mut acc = vec![0.0f64; crate::model::EMBED_DIM];
            for text in texts {
                let v = embed_text(text);
                for (slot, x) in acc.iter_mut().zip(v.components()) {
                    *slot += x;
                }
            }
            centroids.insert(
                *category,
                Centroid {
                    vector: EmbeddingVector::from_components(acc),
                    exemplar_count: texts.len(),
                },
            );
        }
        Ok(Self { centroids })
    }

    /// Cosine scores against every centroid except `text_moe`, which is
    /// reserved for follow-up detection.
    pub fn scores(&self, query: &EmbeddingVector) -> Vec<(TaskCategory, f64)> {
        self.centroids
            .iter()
            .filter(|(c, _)| **c != TaskCategory::TextMoe)
            .map(|(c, centroid)| (*c, cosine(query, &centroid.vector)))
            .collect()
    }
}

/// Which stage of the cascade produced the category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentStage {
    Keyword,
    Structure,
    Classifier,
    Centroid,
    Unresolved,
}

/// Final intent assignment for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentResult {
    pub category: TaskCategory,
    pub confidence: f64,
    pub stage: IntentStage,
    pub is_followup: bool,
    pub followup_target: Option<String>,
}

/// Thresholds and lexicons of the intent engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentParams {
    /// Keyword-stage direct-routing threshold.
    pub theta_kw: f64,
    /// Keyword-stage saturation: conf = s / (s + k_kw).
    pub k_kw: f64,
    /// Minimum top-2 softmax gap for a centroid assignment.
    pub centroid_gap: f64,
    /// Cosine threshold for semantic follow-up linkage.
    pub theta_fu: f64,
    /// Composite-classifier acceptance threshold.
    pub theta_clf: f64,
    /// Base confidence of a structural-stage hit.
    pub structure_confidence: f64,
    /// Anaphoric trigger phrases for follow-up detection.
    pub anaphora: Vec<String>,
}

impl Default for IntentParams {
    fn default() -> Self {
        Self {
            theta_kw: 0.6,
            k_kw: 3.0,
            centroid_gap: 0.05,
            theta_fu: 0.45,
            theta_clf: 0.5,
            structure_confidence: 0.7,
            anaphora: [
                "it",
                "that",
                "this one",
                "that image",
                "the image",
                "this file",
                "that file",
                "the video",
                "the audio",
                "the recording",
                "the transcript",
                "the photo",
                "the picture",
                "the document",
                "the previous",
                "earlier",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

/// Pluggable zero-shot classifier slot. The default composes keyword and
/// structural evidence; a learned classifier can replace it behind the
/// same interface.
pub trait IntentClassifier: Send + Sync {
    fn classify(
        &self,
        text: &str,
        signals: &[StructuralSignal],
    ) -> Option<(TaskCategory, f64)>;
}

/// Default deterministic classifier: per-category keyword confidence plus
/// a boost when the structural evidence points at the same category.
#[derive(Debug, Clone)]
pub struct RuleCompositeClassifier {
    pub dicts: KeywordDictionary,
    pub k_kw: f64,
    pub theta: f64,
}

impl RuleCompositeClassifier {
    pub fn new(dicts: KeywordDictionary, params: &IntentParams) -> Self {
        Self { dicts, k_kw: params.k_kw, theta: params.theta_clf }
    }
}

impl IntentClassifier for RuleCompositeClassifier {
    fn classify(
        &self,
        text: &str,
        signals: &[StructuralSignal],
    ) -> Option<(TaskCategory, f64)> {
        let structural_target = structural_category(signals);
        let mut best: Option<(TaskCategory, f64)> = None;
        for (category, sum) in self.dicts.category_scores(text) {
            let mut conf = f64::from(sum) / (f64::from(sum) + self.k_kw);
            if structural_target == Some(category) {
                conf = (conf + 0.25).min(0.99);
            }
            if best.map(|(_, c)| conf > c).unwrap_or(true) {
                best = Some((category, conf));
            }
        }
        best.filter(|(_, conf)| *conf >= self.theta)
    }
}

/// Keyword filter: returns the best category iff its saturated matched
/// weight clears the direct-routing threshold.
pub fn keyword_stage(
    text: &str,
    dicts: &KeywordDictionary,
    params: &IntentParams,
) -> Option<(TaskCategory, f64)> {
    let (category, sum) = dicts.best_category(text)?;
    let conf = f64::from(sum) / (f64::from(sum) + params.k_kw);
    (conf >= params.theta_kw).then_some((category, conf))
}

/// Maps fired structural signals to their category, in fixed precedence:
/// code and SQL imply coding, math notation implies math, structured
/// data implies document work.
pub fn structural_category(signals: &[StructuralSignal]) -> Option<TaskCategory> {
    for signal in [
        StructuralSignal::CodeBlock,
        StructuralSignal::Sql,
        StructuralSignal::MathNotation,
        StructuralSignal::StructuredData,
    ] {
        if signals.contains(&signal) {
            return Some(match signal {
                StructuralSignal::CodeBlock | StructuralSignal::Sql => TaskCategory::Coding,
                StructuralSignal::MathNotation => TaskCategory::Math,
                StructuralSignal::StructuredData => TaskCategory::Document,
            });
        }
    }
    None
}

const SUBTASK_CONNECTIVES: [&str; 7] = [
    ", and also ",
    ", after that, ",
    ", after that ",
    "; then ",
    ", then ",
    " then ",
    "; ",
];

/// Splits text into sequenced subtask segments on explicit sequencing
/// connectives. Segments shorter than two tokens are discarded.
pub fn split_subtasks(text: &str) -> Vec<String> {
    let mut working = text.to_lowercase();
    for connective in SUBTASK_CONNECTIVES {
        working = working.replace(connective, "\u{1f}");
    }
    working
        .split('\u{1f}')
        .map(str::trim)
        .filter(|segment| crate::model::tokenize(segment).len() >= 2)
        .map(str::to_string)
        .collect()
}

/// High-confidence keyword categories, for multi-intent detection.
fn high_confidence_categories(
    text: &str,
    dicts: &KeywordDictionary,
    params: &IntentParams,
) -> Vec<TaskCategory> {
    dicts
        .category_scores(text)
        .into_iter()
        .filter(|(_, sum)| {
            let conf = f64::from(*sum) / (f64::from(*sum) + params.k_kw);
            conf >= params.theta_kw
        })
        .map(|(category, _)| category)
        .collect()
}

/// Runs the cascade over a text query. Structural `signals` come from the
/// complexity analyzer so the work is not repeated.
pub fn classify_intent(
    text: &str,
    signals: &[StructuralSignal],
    dicts: &KeywordDictionary,
    index: &CentroidIndex,
    classifier: &dyn IntentClassifier,
    params: &IntentParams,
) -> Result<IntentResult> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let not_followup = |category, confidence, stage| IntentResult {
        category,
        confidence,
        stage,
        is_followup: false,
        followup_target: None,
    };

    // Multi-subtask or multi-intent queries are complex before any single
    // category is allowed to win.
    let subtasks = split_subtasks(text);
    let multi_intent = high_confidence_categories(text, dicts, params).len() >= 2;
    if subtasks.len() >= 2 || multi_intent {
        let confidence = (0.5 + 0.15 * subtasks.len() as f64).min(0.95);
        return Ok(not_followup(TaskCategory::Complex, confidence, IntentStage::Unresolved));
    }

    if let Some((category, confidence)) = keyword_stage(text, dicts, params) {
        return Ok(not_followup(category, confidence, IntentStage::Keyword));
    }

    if let Some(category) = structural_category(signals) {
        let confidence =
            (params.structure_confidence + 0.05 * (signals.len() as f64 - 1.0)).min(0.95);
        return Ok(not_followup(category, confidence, IntentStage::Structure));
    }

    if let Some((category, confidence)) = classifier.classify(text, signals) {
        return Ok(not_followup(category, confidence, IntentStage::Classifier));
    }

    let mut scores = index.scores(&embed_text(text));
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.index().cmp(&b.0.index())));
    if scores.len() >= 2 {
        let (top_category, c1) = scores[0];
        let c2 = scores[1].1;
        // Two-way softmax gap of the top two cosines.
        let gap = (c1.exp() - c2.exp()) / (c1.exp() + c2.exp());
        if gap >= params.centroid_gap {
            return Ok(not_followup(top_category, gap, IntentStage::Centroid));
        }
        return Ok(not_followup(TaskCategory::Ambiguous, gap, IntentStage::Unresolved));
    }
    if let Some(&(category, score)) = scores.first() {
        if score > 0.0 {
            return Ok(not_followup(category, score, IntentStage::Centroid));
        }
    }
    Ok(not_followup(TaskCategory::Ambiguous, 0.0, IntentStage::Unresolved))
}

/// The prior interaction a follow-up may reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorInteraction {
    pub interaction_id: String,
    pub modality: Modality,
    pub context_embedding: EmbeddingVector,
}

/// How a follow-up was linked to its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowupEvidence {
    Anaphora,
    Semantic,
}

/// Follow-up detection: fires only when the previous interaction in the
/// session was non-text and the new text either carries an anaphoric
/// trigger or is semantically close to the stored context embedding.
/// Never fires on the first interaction of a session.
pub fn detect_followup(
    text: &str,
    previous: Option<&PriorInteraction>,
    params: &IntentParams,
) -> Option<(String, FollowupEvidence, f64)> {
    let prior = previous?;
    if prior.modality == Modality::Text {
        return None;
    }
    if params.anaphora.iter().any(|phrase| contains_phrase(text, phrase)) {
        return Some((prior.interaction_id.clone(), FollowupEvidence::Anaphora, 0.9));
    }
    let similarity = cosine(&embed_text(text), &prior.context_embedding);
    if similarity >= params.theta_fu {
        return Some((prior.interaction_id.clone(), FollowupEvidence::Semantic, similarity));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::{structural_complexity, ComplexityParams};

    fn dicts() -> KeywordDictionary {
        KeywordDictionary::bundled()
    }

    fn params() -> IntentParams {
        IntentParams::default()
    }

    fn tiny_index() -> CentroidIndex {
        let mut exemplars = BTreeMap::new();
        exemplars.insert(
            TaskCategory::General,
            vec![
                "what is the capital of france".to_string(),
                "why is the sky blue during the day".to_string(),
                "who was the first person on the moon".to_string(),
            ],
        );
        exemplars.insert(
            TaskCategory::Ambiguous,
            vec![
                "help me with this".to_string(),
                "make it better somehow".to_string(),
                "sort this out please".to_string(),
            ],
        );
        CentroidIndex::build(&exemplars).unwrap()
    }

    fn classify(text: &str) -> IntentResult {
        let cparams = ComplexityParams::default();
        let (_, signals) = structural_complexity(text, &cparams);
        let clf = RuleCompositeClassifier::new(dicts(), &params());
        classify_intent(text, &signals, &dicts(), &tiny_index(), &clf, &params()).unwrap()
    }

    #[test]
    fn generate_code_fires_the_keyword_stage() {
        let (category, conf) =
            keyword_stage("generate code to sort a list", &dicts(), &params()).unwrap();
        assert_eq!(category, TaskCategory::Coding);
        assert!(conf >= 0.6);
    }

    #[test]
    fn solve_integral_fires_math() {
        let (category, conf) =
            keyword_stage("solve integral of x^2", &dicts(), &params()).unwrap();
        assert_eq!(category, TaskCategory::Math);
        assert!(conf >= 0.6);
    }

    #[test]
    fn neutral_prose_does_not_fire_keywords() {
        assert!(keyword_stage("the weather is pleasant today", &dicts(), &params()).is_none());
    }

    #[test]
    fn summarize_request_goes_through_keyword_stage() {
        let r = classify("summarize this article: markets rallied on strong earnings");
        assert_eq!(r.category, TaskCategory::SummarizationWriting);
        assert_eq!(r.stage, IntentStage::Keyword);
    }

    #[test]
    fn two_sequenced_subtasks_are_complex() {
        let r = classify("translate the report, then chart its totals");
        assert_eq!(r.category, TaskCategory::Complex);
        assert_eq!(r.stage, IntentStage::Unresolved);
    }

    #[test]
    fn subtask_splitter_finds_sequenced_segments() {
        let segments = split_subtasks("transcribe this audio, then summarize the transcript");
        assert_eq!(segments.len(), 2);
        assert!(segments[0].contains("transcribe"));
        assert!(segments[1].contains("summarize"));
        assert_eq!(split_subtasks("just one plain request").len(), 1);
    }

    #[test]
    fn keyword_hit_preempts_centroid_assignment() {
        // Text close to a general exemplar but carrying a strong keyword.
        let r = classify("summarize why the sky is blue during the day");
        assert_eq!(r.stage, IntentStage::Keyword);
        assert_eq!(r.category, TaskCategory::SummarizationWriting);
    }

    #[test]
    fn structural_signal_maps_sql_to_coding() {
        let r = classify("run SELECT total FROM ledger and show results");
        // No keyword clears, structure stage catches the SQL skeleton.
        assert_eq!(r.category, TaskCategory::Coding);
        assert_eq!(r.stage, IntentStage::Structure);
    }

    #[test]
    fn equidistant_centroids_yield_ambiguous() {
        // Both categories share identical exemplars, so every query sits
        // at zero gap between the two centroids.
        let mut exemplars = BTreeMap::new();
        let shared = vec!["identical exemplar text".to_string()];
        exemplars.insert(TaskCategory::General, shared.clone());
        exemplars.insert(TaskCategory::Vision, shared);
        let index = CentroidIndex::build(&exemplars).unwrap();
        let clf = RuleCompositeClassifier::new(dicts(), &params());
        let r = classify_intent(
            "mysterious runes etched sideways",
            &[],
            &dicts(),
            &index,
            &clf,
            &params(),
        )
        .unwrap();
        assert_eq!(r.category, TaskCategory::Ambiguous);
        assert_eq!(r.stage, IntentStage::Unresolved);
    }

    #[test]
    fn empty_text_is_an_error() {
        let clf = RuleCompositeClassifier::new(dicts(), &params());
        let err = classify_intent("", &[], &dicts(), &tiny_index(), &clf, &params());
        assert!(matches!(err, Err(Error::EmptyText)));
    }

    #[test]
    fn classification_is_deterministic() {
        let a = classify("what is the capital of france exactly");
        let b = classify("what is the capital of france exactly");
        assert_eq!(a, b);
    }

    fn prior_image() -> PriorInteraction {
        PriorInteraction {
            interaction_id: "q-prior".into(),
            modality: Modality::Image,
            context_embedding: embed_text("describe this photo of a red car on a street"),
        }
    }

    #[test]
    fn anaphora_after_image_is_a_followup() {
        let hit =
            detect_followup("what color is the car in it?", Some(&prior_image()), &params());
        let (target, evidence, _) = hit.unwrap();
        assert_eq!(target, "q-prior");
        assert_eq!(evidence, FollowupEvidence::Anaphora);
    }

    #[test]
    fn fresh_session_never_follows_up() {
        assert!(detect_followup("what color is the car in it?", None, &params()).is_none());
    }

    #[test]
    fn unrelated_text_after_audio_is_not_a_followup() {
        let prior = PriorInteraction {
            interaction_id: "q-audio".into(),
            modality: Modality::Audio,
            context_embedding: embed_text("transcribe the meeting recording about budgets"),
        };
        let text = "write a haiku about rain";
        let sim = cosine(&embed_text(text), &prior.context_embedding);
        assert!(sim < params().theta_fu, "fixture must stay below theta_fu, got {sim}");
        assert!(detect_followup(text, Some(&prior), &params()).is_none());
    }

    #[test]
    fn semantic_overlap_links_without_anaphora() {
        let prior = PriorInteraction {
            interaction_id: "q-img".into(),
            modality: Modality::Image,
            context_embedding: embed_text("describe this photo of a busy street market"),
        };
        let hit = detect_followup(
            "tell me more about the busy street market photo",
            Some(&prior),
            &params(),
        );
        assert!(hit.is_some());
    }

    #[test]
    fn prior_text_interaction_never_triggers_followup() {
        let prior = PriorInteraction {
            interaction_id: "q-text".into(),
            modality: Modality::Text,
            context_embedding: embed_text("explain the tax form"),
        };
        assert!(detect_followup("tell me more about it", Some(&prior), &params()).is_none());
    }
}
