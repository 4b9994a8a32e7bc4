//! Shared domain vocabulary: queries, modalities, policies, and the
//! deterministic feature-hashed embedding every similarity score rides on.
//!
//! All types here are immutable after construction and safe to share
//! across threads. Enum names serialize as lowercase snake_case strings;
//! that naming is the contract for corpus files and reports, and parsing
//! an unknown name is an error, never a silent default.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Embedding dimensionality for the feature-hashed text vectors.
pub const EMBED_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
/// Offset basis for the second hash that supplies the bucket sign.
const SIGN_OFFSET: u64 = 0xaf63_bd4c_8601_b7df;

/// FNV-1a over `bytes`, starting from `basis`.
pub fn fnv1a64(bytes: &[u8], basis: u64) -> u64 {
    let mut h = basis;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Stable hex digest of arbitrary bytes, used to key fixture annotations
/// and memory records. FNV-1a 64-bit, lowercase hex.
pub fn content_digest(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes, FNV_OFFSET))
}

/// The input medium of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Image,
    Audio,
    Video,
    Document,
    Multimodal,
}

impl Modality {
    pub const ALL: [Modality; 6] = [
        Modality::Text,
        Modality::Image,
        Modality::Audio,
        Modality::Video,
        Modality::Document,
        Modality::Multimodal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Audio => "audio",
            Modality::Video => "video",
            Modality::Document => "document",
            Modality::Multimodal => "multimodal",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == name)
            .ok_or_else(|| Error::UnknownName(name.to_string(), "Modality"))
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four-way intake shape of a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    IndependentText,
    TextWithAttachments,
    IndependentAttachments,
    AudioRecording,
}

/// Downstream pipeline class assigned at intake; `FollowUp` is assigned
/// later by the intent engine, never by intake itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionCategory {
    TextOnly,
    NonText,
    Hybrid,
    FollowUp,
}

/// The 13 fine-grained task categories used for routing and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    Math,
    Coding,
    SummarizationWriting,
    Vision,
    Document,
    ImageGen,
    Audio,
    Video,
    TextMoe,
    ObjectDetect,
    Complex,
    Ambiguous,
    General,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 13] = [
        TaskCategory::Math,
        TaskCategory::Coding,
        TaskCategory::SummarizationWriting,
        TaskCategory::Vision,
        TaskCategory::Document,
        TaskCategory::ImageGen,
        TaskCategory::Audio,
        TaskCategory::Video,
        TaskCategory::TextMoe,
        TaskCategory::ObjectDetect,
        TaskCategory::Complex,
        TaskCategory::Ambiguous,
        TaskCategory::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskCategory::Math => "math",
            TaskCategory::Coding => "coding",
            TaskCategory::SummarizationWriting => "summarization_writing",
            TaskCategory::Vision => "vision",
            TaskCategory::Document => "document",
            TaskCategory::ImageGen => "image_gen",
            TaskCategory::Audio => "audio",
            TaskCategory::Video => "video",
            TaskCategory::TextMoe => "text_moe",
            TaskCategory::ObjectDetect => "object_detect",
            TaskCategory::Complex => "complex",
            TaskCategory::Ambiguous => "ambiguous",
            TaskCategory::General => "general",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == name)
            .ok_or_else(|| Error::UnknownName(name.to_string(), "TaskCategory"))
    }

    /// Index into [`TaskCategory::ALL`]; stable, used by confusion matrices.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl std::fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse cost tier of a routing decision: efficient open-tier execution
/// versus premium escalation. This is the label swept by threshold
/// calibration and scored by coarse routing accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostTier {
    Efficient,
    Premium,
}

/// User budget stance propagated as a global routing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    OpenSourceOnly,
    PremiumAllowed,
    Auto,
}

/// Per-query user policy: tier access plus a cost budget in normalized
/// units where one flagship premium call costs 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPolicy {
    pub mode: PolicyMode,
    pub cost_budget: f64,
    pub unlimited: bool,
}

impl UserPolicy {
    pub fn new(mode: PolicyMode, cost_budget: f64, unlimited: bool) -> Result<Self> {
        if !unlimited && (cost_budget.is_nan() || cost_budget < 0.0) {
            return Err(Error::InvalidQuery(
                String::new(),
                format!("cost_budget must be non-negative, got {cost_budget}"),
            ));
        }
        Ok(Self { mode, cost_budget, unlimited })
    }

    pub fn auto_unlimited() -> Self {
        Self { mode: PolicyMode::Auto, cost_budget: 0.0, unlimited: true }
    }

    pub fn open_only() -> Self {
        Self { mode: PolicyMode::OpenSourceOnly, cost_budget: 0.0, unlimited: true }
    }

    pub fn premium_allowed(self) -> bool {
        !matches!(self.mode, PolicyMode::OpenSourceOnly)
    }
}

impl Default for UserPolicy {
    fn default() -> Self {
        Self::auto_unlimited()
    }
}

/// A binary attachment carried by a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub filename: String,
    /// Declared MIME type; may be empty when the sender did not set one.
    pub declared_mime: String,
    pub content: Vec<u8>,
    pub size_bytes: usize,
}

impl Attachment {
    pub fn new(
        filename: impl Into<String>,
        declared_mime: impl Into<String>,
        content: Vec<u8>,
    ) -> Result<Self> {
        let filename = filename.into();
        if filename.is_empty() {
            return Err(Error::InvalidQuery(
                String::new(),
                "attachment filename must be non-empty".to_string(),
            ));
        }
        let size_bytes = content.len();
        Ok(Self { filename, declared_mime: declared_mime.into(), content, size_bytes })
    }

    /// Lowercased filename suffix after the final dot, if any.
    pub fn extension(&self) -> Option<String> {
        let name = self.filename.rsplit('/').next().unwrap_or(&self.filename);
        let (stem, ext) = name.rsplit_once('.')?;
        if stem.is_empty() || ext.is_empty() {
            return None;
        }
        Some(ext.to_ascii_lowercase())
    }

    pub fn digest(&self) -> String {
        content_digest(&self.content)
    }
}

/// One user request: text and/or attachments plus policy and session linkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub attachments: Vec<Attachment>,
    pub session_id: String,
    pub policy: UserPolicy,
    /// Monotonic arrival timestamp in milliseconds.
    pub arrived_at: u64,
}

impl Query {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        attachments: Vec<Attachment>,
        session_id: impl Into<String>,
        policy: UserPolicy,
        arrived_at: u64,
    ) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        if text.is_empty() && attachments.is_empty() {
            return Err(Error::InvalidQuery(
                id,
                "query must have text or at least one attachment".to_string(),
            ));
        }
        Ok(Self { id, text, attachments, session_id: session_id.into(), policy, arrived_at })
    }

    /// Convenience constructor for plain text queries.
    pub fn text_only(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(id, text, Vec::new(), "s-default", UserPolicy::default(), 0)
            .expect("non-empty text")
    }

    pub fn has_text(&self) -> bool {
        !self.text.is_empty()
    }
}

/// L2-normalized fixed-dimension embedding. The zero vector is permitted
/// only as the "no content" sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zero() -> Self {
        Self(vec![0.0; EMBED_DIM])
    }

    /// Builds a vector from raw components, normalizing to unit length.
    /// All-zero input stays the zero sentinel.
    pub fn from_components(components: Vec<f64>) -> Self {
        debug_assert_eq!(components.len(), EMBED_DIM);
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self(components);
        }
        Self(components.into_iter().map(|x| x / norm).collect())
    }

    /// Wraps raw components without normalizing. For carriers that are
    /// deliberately not unit length, like convex combinations of unit
    /// vectors or norm-preserving rotations of them.
    pub fn from_raw(components: Vec<f64>) -> Self {
        debug_assert_eq!(components.len(), EMBED_DIM);
        Self(components)
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Deterministic feature-hashed bag-of-words embedding: lowercase, split
/// on non-alphanumerics, hash each token into one of [`EMBED_DIM`] buckets
/// with FNV-1a, flip the sign from a bit of a second hash, L2-normalize.
/// Identical text always yields an identical vector; empty or tokenless
/// text yields the zero vector.
pub fn embed_text(text: &str) -> EmbeddingVector {
    let mut acc = vec![0.0f64; EMBED_DIM];
    let mut any = false;
    for token in tokenize(text) {
        let bytes = token.as_bytes();
        let bucket = (fnv1a64(bytes, FNV_OFFSET) % EMBED_DIM as u64) as usize;
        let sign = if fnv1a64(bytes, SIGN_OFFSET) & 1 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
        any = true;
    }
    if !any {
        return EmbeddingVector::zero();
    }
    EmbeddingVector::from_components(acc)
}

/// Lowercased alphanumeric tokens of `text`, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// True when `phrase`'s token sequence appears contiguously in `text`'s
/// token stream. Both sides tokenize the same way as [`embed_text`].
pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    let haystack = tokenize(text);
    let needle = tokenize(phrase);
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Cosine similarity in [-1, 1]; zero when either vector is zero.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.components().iter().zip(b.components()).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_embeds_to_zero() {
        assert!(embed_text("").is_zero());
        assert!(embed_text("  \t\n").is_zero());
    }

    #[test]
    fn repeated_tokens_share_direction() {
        let a = embed_text("abc abc");
        let b = embed_text("abc");
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn related_text_scores_above_unrelated() {
        let base = embed_text("solve this integral");
        let related = embed_text("compute the integral");
        let unrelated = embed_text("paint a sunset");
        assert!(cosine(&base, &related) > cosine(&base, &unrelated));
    }

    #[test]
    fn cosine_identity_orthogonal_and_hand_value() {
        let v = embed_text("a distinctive phrase about routing");
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-9);

        let mut one = vec![0.0; EMBED_DIM];
        one[0] = 1.0;
        let mut other = vec![0.0; EMBED_DIM];
        other[1] = 1.0;
        let a = EmbeddingVector::from_components(one);
        let b = EmbeddingVector::from_components(other);
        assert_eq!(cosine(&a, &b), 0.0);

        let mut x = vec![0.0; EMBED_DIM];
        x[0] = 0.6;
        x[1] = 0.8;
        let mut y = vec![0.0; EMBED_DIM];
        y[0] = 1.0;
        let x = EmbeddingVector::from_components(x);
        let y = EmbeddingVector::from_components(y);
        assert!((cosine(&x, &y) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_cosine_is_zero() {
        let z = EmbeddingVector::zero();
        let v = embed_text("anything");
        assert_eq!(cosine(&z, &v), 0.0);
    }

    #[test]
    fn enum_names_are_a_closed_set() {
        assert_eq!(TaskCategory::parse("text_moe").unwrap(), TaskCategory::TextMoe);
        assert_eq!(
            TaskCategory::parse("summarization_writing").unwrap(),
            TaskCategory::SummarizationWriting
        );
        assert!(TaskCategory::parse("texting").is_err());
        assert!(Modality::parse("hologram").is_err());

        let json: std::result::Result<TaskCategory, _> = serde_json::from_str("\"texting\"");
        assert!(json.is_err());
        let ok: TaskCategory = serde_json::from_str("\"object_detect\"").unwrap();
        assert_eq!(ok, TaskCategory::ObjectDetect);
    }

    #[test]
    fn all_13_categories_serialize_snake_case() {
        assert_eq!(TaskCategory::ALL.len(), 13);
        for cat in TaskCategory::ALL {
            let s = serde_json::to_string(&cat).unwrap();
            assert_eq!(s, format!("\"{}\"", cat.as_str()));
            let back: TaskCategory = serde_json::from_str(&s).unwrap();
            assert_eq!(back, cat);
        }
    }

    #[test]
    fn query_requires_content() {
        let err = Query::new("q1", "", Vec::new(), "s", UserPolicy::default(), 0);
        assert!(err.is_err());
        let att = Attachment::new("a.png", "image/png", vec![1, 2, 3]).unwrap();
        assert_eq!(att.size_bytes, 3);
        let ok = Query::new("q1", "", vec![att], "s", UserPolicy::default(), 0);
        assert!(ok.is_ok());
    }

    #[test]
    fn query_round_trips_losslessly() {
        let att = Attachment::new("blob.bin", "", vec![0xff, 0xd8, 0xff, 0x00, 0x7f]).unwrap();
        let q = Query::new(
            "q-42",
            "what is in this file?",
            vec![att],
            "sess-9",
            UserPolicy::open_only(),
            1234,
        )
        .unwrap();
        let json = serde_json::to_string(&q).unwrap();
        let back: Query = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
        assert_eq!(back.attachments[0].content, vec![0xff, 0xd8, 0xff, 0x00, 0x7f]);
    }

    proptest! {
        #[test]
        fn embed_text_is_pure(text in ".{0,200}") {
            let a = embed_text(&text);
            let b = embed_text(&text);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn embeddings_are_unit_or_zero(text in ".{0,200}") {
            let v = embed_text(&text);
            if !v.is_zero() {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-6);
            }
        }
    }
}
