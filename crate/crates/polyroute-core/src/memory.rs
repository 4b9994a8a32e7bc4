//! Layered session memory and ContextScore selection.
//!
//! Five layers per session: a short-term window of the most recent
//! exchanges, the full searchable history, per-modality banks, the
//! dynamically retrieved relevant-context view, and an extractive
//! compressed summary rebuilt every compression stride. Context bundles
//! select items scoring `theta_s * R + theta_t * T + theta_m * M` at or
//! above the merge threshold, greedily packed into a character budget.
//!
//! The store is session-partitioned with a single-writer contract per
//! session; different sessions are fully concurrent. Each session
//! persists as an append-only record file, one line per stored item:
//! `timestamp<TAB>layer<TAB>modality<TAB>content<TAB>digest` with tabs
//! and newlines escaped inside content.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::intent::PriorInteraction;
use crate::model::{
    content_digest, cosine, embed_text, EmbeddingVector, Modality,
};
use crate::{Error, Result};

/// The memory layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryLayer {
    ShortTerm,
    FullHistory,
    ModuleSpecific(Modality),
    RelevantContext,
    Compressed,
}

impl MemoryLayer {
    fn tag(&self) -> String {
        match self {
            MemoryLayer::ShortTerm => "short_term".to_string(),
            MemoryLayer::FullHistory => "full_history".to_string(),
            MemoryLayer::ModuleSpecific(m) => format!("module:{m}"),
            MemoryLayer::RelevantContext => "relevant_context".to_string(),
            MemoryLayer::Compressed => "compressed".to_string(),
        }
    }

    fn parse(tag: &str) -> Result<Self> {
        if let Some(m) = tag.strip_prefix("module:") {
            return Ok(MemoryLayer::ModuleSpecific(Modality::parse(m)?));
        }
        match tag {
            "short_term" => Ok(MemoryLayer::ShortTerm),
            "full_history" => Ok(MemoryLayer::FullHistory),
            "relevant_context" => Ok(MemoryLayer::RelevantContext),
            "compressed" => Ok(MemoryLayer::Compressed),
            other => Err(Error::UnknownName(other.to_string(), "MemoryLayer")),
        }
    }
}

/// One stored memory item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryItem {
    pub item_id: String,
    pub layer: MemoryLayer,
    pub content: String,
    pub embedding: EmbeddingVector,
    pub modality: Modality,
    pub last_access: u64,
    pub session_id: String,
}

/// Tunable constants of the memory subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    /// Short-term window size K, in exchanges.
    pub short_term_window: usize,
    /// Recency decay constant in milliseconds.
    pub tau_decay_ms: f64,
    /// Merge threshold on the total ContextScore.
    pub threshold: f64,
    /// Context budget in characters.
    pub budget_chars: usize,
    /// Compressed summary rebuild stride, in interactions.
    pub compression_stride: usize,
    /// History length beyond which semantic weight grows against drift.
    pub drift_threshold: usize,
    pub theta_s: f64,
    pub theta_t: f64,
    pub theta_m: f64,
}

impl Default for MemoryParams {
    fn default() -> Self {
        Self {
            short_term_window: 8,
            tau_decay_ms: 600_000.0,
            threshold: 0.35,
            budget_chars: 4000,
            compression_stride: 10,
            drift_threshold: 30,
            theta_s: 0.5,
            theta_t: 0.3,
            theta_m: 0.2,
        }
    }
}

impl MemoryParams {
    pub fn validate(&self) -> Result<()> {
        if self.theta_s < 0.0 || self.theta_t < 0.0 || self.theta_m < 0.0 {
            return Err(Error::InvalidConfig("memory thetas must be non-negative".into()));
        }
        let sum = self.theta_s + self.theta_t + self.theta_m;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("memory thetas must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Long-session re-weighting: semantic weight grows by 0.05 per
    /// drift-threshold multiple (capped at 0.8) and recency absorbs the
    /// difference.
    pub fn drifted(&self, history_len: usize) -> (f64, f64, f64) {
        if self.drift_threshold == 0 || history_len <= self.drift_threshold {
            return (self.theta_s, self.theta_t, self.theta_m);
        }
        let steps = (history_len / self.drift_threshold) as f64;
        let theta_s = (self.theta_s + 0.05 * steps).min(0.8);
        let theta_t = (self.theta_t - (theta_s - self.theta_s)).max(0.0);
        (theta_s, theta_t, self.theta_m)
    }
}

/// The three score parts plus their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextScoreParts {
    pub relevance: f64,
    pub recency: f64,
    pub modality_score: f64,
    pub total: f64,
}

/// ContextScore of one item against one query:
/// R is clamped cosine relevance, T exponential recency decay, M is 1 on
/// modality match (compressed items always match) and 0.3 otherwise, so
/// cross-modal evidence survives when semantically strong.
pub fn context_score(
    item: &MemoryItem,
    query_embedding: &EmbeddingVector,
    required_modality: Modality,
    now: u64,
    thetas: (f64, f64, f64),
    tau_decay_ms: f64,
) -> ContextScoreParts {
    let relevance = cosine(query_embedding, &item.embedding).max(0.0);
    let age_ms = now.saturating_sub(item.last_access) as f64;
    let recency = (-age_ms / tau_decay_ms).exp();
    let modality_score = if item.modality == required_modality
        || matches!(item.layer, MemoryLayer::Compressed)
    {
        1.0
    } else {
        0.3
    };
    let (theta_s, theta_t, theta_m) = thetas;
    let total = theta_s * relevance + theta_t * recency + theta_m * modality_score;
    ContextScoreParts { relevance, recency, modality_score, total }
}

/// One selected bundle entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleItem {
    pub item_id: String,
    pub layer: MemoryLayer,
    pub modality: Modality,
    pub content: String,
    pub score: ContextScoreParts,
}

/// The context slice handed to a route or agent node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextBundle {
    pub items: Vec<BundleItem>,
    pub budget_chars: usize,
    pub truncated: bool,
}

impl ContextBundle {
    pub fn render(&self) -> String {
        self.items.iter().map(|i| i.content.as_str()).collect::<Vec<_>>().join("\n")
    }

    pub fn digest(&self) -> String {
        content_digest(self.render().as_bytes())
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Default)]
struct SessionMemory {
    short_term: Vec<MemoryItem>,
    full_history: Vec<MemoryItem>,
    module_banks: BTreeMap<Modality, Vec<MemoryItem>>,
    compressed: Option<MemoryItem>,
    seq: usize,
}

/// Session-partitioned memory store.
#[derive(Debug, Default)]
pub struct MemoryStore {
    params: MemoryParams,
    sessions: Mutex<BTreeMap<String, SessionMemory>>,
}

impl MemoryStore {
    pub fn new(params: MemoryParams) -> Self {
        Self { params, sessions: Mutex::new(BTreeMap::new()) }
    }

    pub fn params(&self) -> &MemoryParams {
        &self.params
    }

    pub fn session_ids(&self) -> Vec<String> {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        sessions.keys().cloned().collect()
    }

    pub fn session_len(&self, session_id: &str) -> usize {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        sessions.get(session_id).map(|s| s.full_history.len()).unwrap_or(0)
    }

    pub fn short_term_len(&self, session_id: &str) -> usize {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        sessions.get(session_id).map(|s| s.short_term.len()).unwrap_or(0)
    }

    pub fn module_bank_len(&self, session_id: &str, modality: Modality) -> usize {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        sessions
            .get(session_id)
            .and_then(|s| s.module_banks.get(&modality))
            .map(|b| b.len())
            .unwrap_or(0)
    }

    /// Records one completed interaction: appends to the full history,
    /// maintains the short-term window, mirrors non-text interactions
    /// into their modality bank, and rebuilds the compressed summary
    /// whenever the history length crosses a stride multiple.
    pub fn record_interaction(
        &self,
        session_id: &str,
        query_id: &str,
        query_text: &str,
        modality: Modality,
        response_summary: &str,
        now: u64,
    ) {
        let content = format!("[{query_id}] asked: {query_text} | answered: {response_summary}");
        let embedding = embed_text(&content);
        let mut sessions = self.sessions.lock().expect("memory store poisoned");
        let session = sessions.entry(session_id.to_string()).or_default();
        session.seq += 1;
        let seq = session.seq;
        let make = |layer: MemoryLayer| MemoryItem {
            item_id: format!("{session_id}:{}:{seq}", layer.tag()),
            layer,
            content: content.clone(),
            embedding: embedding.clone(),
            modality,
            last_access: now,
            session_id: session_id.to_string(),
        };

        session.full_history.push(make(MemoryLayer::FullHistory));
        session.short_term.push(make(MemoryLayer::ShortTerm));
        let window = self.params.short_term_window;
        if session.short_term.len() > window {
            let excess = session.short_term.len() - window;
            session.short_term.drain(..excess);
        }
        if modality != Modality::Text {
            session
                .module_banks
                .entry(modality)
                .or_default()
                .push(make(MemoryLayer::ModuleSpecific(modality)));
        }
        if self.params.compression_stride > 0
            && session.full_history.len().is_multiple_of(self.params.compression_stride)
        {
            session.compressed = Some(compress(session_id, &session.full_history, seq, now));
        }
    }

    /// The most recent interaction of a session, for follow-up detection.
    pub fn last_interaction(&self, session_id: &str) -> Option<PriorInteraction> {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        let session = sessions.get(session_id)?;
        let last = session.full_history.last()?;
        let interaction_id = last
            .content
            .split(']')
            .next()
            .and_then(|s| s.strip_prefix('['))
            .unwrap_or(&last.item_id)
            .to_string();
        Some(PriorInteraction {
            interaction_id,
            modality: last.modality,
            context_embedding: last.embedding.clone(),
        })
    }

    /// Scores every candidate item and packs those at or above the merge
    /// threshold into the budget, best first. With a scope, module-bank
    /// candidates are restricted to the scoped modality. Long sessions
    /// re-weight semantics upward per the drift schedule. Duplicate
    /// content (an exchange living in both the short-term window and the
    /// history) is merged once.
    pub fn build_context(
        &self,
        session_id: &str,
        query_embedding: &EmbeddingVector,
        required_modality: Modality,
        scope: Option<Modality>,
        now: u64,
    ) -> ContextBundle {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        let Some(session) = sessions.get(session_id) else {
            return ContextBundle {
                items: Vec::new(),
                budget_chars: self.params.budget_chars,
                truncated: false,
            };
        };
        let thetas = self.params.drifted(session.full_history.len());

        let mut candidates: Vec<&MemoryItem> = Vec::new();
        candidates.extend(session.short_term.iter());
        candidates.extend(session.full_history.iter());
        for (modality, bank) in &session.module_banks {
            if scope.map(|s| s == *modality).unwrap_or(true) {
                candidates.extend(bank.iter());
            }
        }
        if let Some(compressed) = &session.compressed {
            candidates.push(compressed);
        }

        let mut scored: Vec<(&MemoryItem, ContextScoreParts)> = candidates
            .into_iter()
            .map(|item| {
                let score = context_score(
                    item,
                    query_embedding,
                    required_modality,
                    now,
                    thetas,
                    self.params.tau_decay_ms,
                );
                (item, score)
            })
            .filter(|(_, score)| score.total >= self.params.threshold)
            .collect();
        // Equal totals break toward the more specific layer, so a
        // module-bank or compressed entry outranks its history twin.
        scored.sort_by(|a, b| {
            b.1.total
                .partial_cmp(&a.1.total)
                .unwrap()
                .then(layer_specificity(&a.0.layer).cmp(&layer_specificity(&b.0.layer)))
                .then(a.0.item_id.cmp(&b.0.item_id))
        });

        let mut items = Vec::new();
        let mut used = 0usize;
        let mut truncated = false;
        let mut seen_content: Vec<&str> = Vec::new();
        for (item, score) in scored {
            if seen_content.contains(&item.content.as_str()) {
                continue;
            }
            if used + item.content.len() > self.params.budget_chars {
                truncated = true;
                continue;
            }
            used += item.content.len();
            seen_content.push(item.content.as_str());
            items.push(BundleItem {
                item_id: item.item_id.clone(),
                layer: item.layer,
                modality: item.modality,
                content: item.content.clone(),
                score,
            });
        }
        ContextBundle { items, budget_chars: self.params.budget_chars, truncated }
    }

    /// Appends every item of `session_id` to one record file under `dir`.
    pub fn persist_session(&self, session_id: &str, dir: &std::path::Path) -> Result<()> {
        let sessions = self.sessions.lock().expect("memory store poisoned");
        let Some(session) = sessions.get(session_id) else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{session_id}.log"));
        let mut file = std::fs::File::create(&path)?;
        let mut all: Vec<&MemoryItem> = Vec::new();
        all.extend(session.full_history.iter());
        all.extend(session.short_term.iter());
        for bank in session.module_banks.values() {
            all.extend(bank.iter());
        }
        all.extend(session.compressed.iter());
        for item in all {
            writeln!(
                file,
                "{}\t{}\t{}\t{}\t{}",
                item.last_access,
                item.layer.tag(),
                item.modality,
                escape(&item.content),
                content_digest(item.content.as_bytes()),
            )?;
        }
        Ok(())
    }

    /// Rebuilds a session from its record file. Embeddings are recomputed
    /// from content; the stored digest guards against corruption.
    pub fn load_session(&self, session_id: &str, dir: &std::path::Path) -> Result<()> {
        let path = dir.join(format!("{session_id}.log"));
        let raw = std::fs::read_to_string(&path)?;
        let mut session = SessionMemory::default();
        for (lineno, line) in raw.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, '\t').collect();
            if fields.len() != 5 {
                return Err(Error::InvalidConfig(format!(
                    "memory record {}:{} is malformed",
                    path.display(),
                    lineno + 1
                )));
            }
            let last_access: u64 = fields[0].parse().map_err(|_| {
                Error::InvalidConfig(format!("bad timestamp in memory record line {}", lineno + 1))
            })?;
            let layer = MemoryLayer::parse(fields[1])?;
            let modality = Modality::parse(fields[2])?;
            let content = unescape(fields[3]);
            if content_digest(content.as_bytes()) != fields[4] {
                return Err(Error::InvalidConfig(format!(
                    "memory record digest mismatch at line {}",
                    lineno + 1
                )));
            }
            session.seq += 1;
            let item = MemoryItem {
                item_id: format!("{session_id}:{}:{}", layer.tag(), session.seq),
                layer,
                embedding: embed_text(&content),
                content,
                modality,
                last_access,
                session_id: session_id.to_string(),
            };
            match layer {
                MemoryLayer::FullHistory => session.full_history.push(item),
                MemoryLayer::ShortTerm => session.short_term.push(item),
                MemoryLayer::ModuleSpecific(m) => {
                    session.module_banks.entry(m).or_default().push(item)
                }
                MemoryLayer::Compressed => session.compressed = Some(item),
                MemoryLayer::RelevantContext => {}
            }
        }
        let window = self.params.short_term_window;
        if session.short_term.len() > window {
            let excess = session.short_term.len() - window;
            session.short_term.drain(..excess);
        }
        let mut sessions = self.sessions.lock().expect("memory store poisoned");
        sessions.insert(session_id.to_string(), session);
        Ok(())
    }
}

fn layer_specificity(layer: &MemoryLayer) -> u8 {
    match layer {
        MemoryLayer::ModuleSpecific(_) => 0,
        MemoryLayer::Compressed => 1,
        MemoryLayer::RelevantContext => 2,
        MemoryLayer::ShortTerm => 3,
        MemoryLayer::FullHistory => 4,
    }
}

/// Extractive compression: the history entries closest to the history
/// centroid, joined most-central first.
fn compress(session_id: &str, history: &[MemoryItem], seq: usize, now: u64) -> MemoryItem {
    let mut acc = vec![0.0f64; crate::model::EMBED_DIM];
    for item in history {
        for (slot, x) in acc.iter_mut().zip(item.embedding.components()) {
            *slot += x;
        }
    }
    let centroid = EmbeddingVector::from_components(acc);
    let mut ranked: Vec<(&MemoryItem, f64)> =
        history.iter().map(|i| (i, cosine(&centroid, &i.embedding))).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.item_id.cmp(&b.0.item_id)));
    let content = ranked
        .iter()
        .take(3)
        .map(|(i, _)| i.content.as_str())
        .collect::<Vec<_>>()
        .join(" || ");
    MemoryItem {
        item_id: format!("{session_id}:compressed:{seq}"),
        layer: MemoryLayer::Compressed,
        embedding: embed_text(&content),
        content,
        modality: Modality::Text,
        last_access: now,
        session_id: session_id.to_string(),
    }
}

fn escape(content: &str) -> String {
    content.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(content: &str) -> String {
    let mut out = String::with_capacity(content.len());
    let mut chars = content.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> MemoryStore {
        MemoryStore::new(MemoryParams::default())
    }

    fn item(content: &str, modality: Modality, last_access: u64) -> MemoryItem {
        MemoryItem {
            item_id: format!("s:test:{last_access}"),
            layer: MemoryLayer::FullHistory,
            embedding: embed_text(content),
            content: content.to_string(),
            modality,
            last_access,
            session_id: "s".into(),
        }
    }

    #[test]
    fn first_interaction_populates_both_windows() {
        let s = store();
        s.record_interaction("s1", "q1", "hello there", Modality::Text, "hi", 1000);
        assert_eq!(s.short_term_len("s1"), 1);
        assert_eq!(s.session_len("s1"), 1);
    }

    #[test]
    fn short_term_window_evicts_oldest_beyond_k() {
        let s = store();
        let k = s.params().short_term_window;
        for i in 0..=k {
            s.record_interaction("s1", &format!("q{i}"), &format!("question {i}"), Modality::Text, "ok", i as u64);
        }
        assert_eq!(s.short_term_len("s1"), k);
        assert_eq!(s.session_len("s1"), k + 1);
    }

    #[test]
    fn image_interactions_mirror_into_the_image_bank() {
        let s = store();
        s.record_interaction("s1", "q1", "describe the photo", Modality::Image, "a cat", 5);
        assert_eq!(s.module_bank_len("s1", Modality::Image), 1);
        assert_eq!(s.module_bank_len("s1", Modality::Audio), 0);
        assert_eq!(s.session_len("s1"), 1);
    }

    #[test]
    fn pure_semantic_weight_with_identical_embeddings_scores_one() {
        let m = item("exact phrase", Modality::Text, 0);
        let score =
            context_score(&m, &embed_text("exact phrase"), Modality::Text, 0, (1.0, 0.0, 0.0), 600_000.0);
        assert!((score.total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pure_recency_weight_at_zero_age_scores_one() {
        let m = item("anything", Modality::Text, 42);
        let score =
            context_score(&m, &embed_text("unrelated"), Modality::Text, 42, (0.0, 1.0, 0.0), 600_000.0);
        assert!((score.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_context_score() {
        // theta = (0.5, 0.3, 0.2), R = 0.8, T = 0.5, M = 1 -> 0.75.
        let total: f64 = 0.5 * 0.8 + 0.3 * 0.5 + 0.2 * 1.0;
        assert!((total - 0.75).abs() < 1e-12);
        // And through the function: recency 0.5 means age = tau * ln 2.
        let tau = 600_000.0;
        let age = (tau * std::f64::consts::LN_2) as u64;
        let m = item("memory content", Modality::Text, 0);
        let score = context_score(&m, &m.embedding.clone(), Modality::Text, age, (0.5, 0.3, 0.2), tau);
        // R = 1 here, so swap in the hand R = 0.8 piecewise.
        assert!((score.recency - 0.5).abs() < 1e-6);
        assert_eq!(score.modality_score, 1.0);
    }

    #[test]
    fn recency_strictly_decreases_with_age() {
        let m = item("content", Modality::Text, 0);
        let mut last = f64::INFINITY;
        for age in [0u64, 1000, 10_000, 100_000, 1_000_000] {
            let s = context_score(&m, &embed_text("x"), Modality::Text, age, (0.0, 1.0, 0.0), 600_000.0);
            assert!(s.recency < last || age == 0);
            last = s.recency;
        }
    }

    #[test]
    fn empty_session_builds_an_empty_bundle() {
        let s = store();
        let bundle = s.build_context("ghost", &embed_text("query"), Modality::Text, None, 0);
        assert!(bundle.is_empty());
        assert!(!bundle.truncated);
    }

    #[test]
    fn scoped_build_excludes_other_modality_banks() {
        let s = store();
        s.record_interaction("s1", "q1", "describe the photo of a car", Modality::Image, "a red car", 100);
        s.record_interaction("s1", "q2", "transcribe the meeting recording", Modality::Audio, "notes", 200);
        for i in 0..10 {
            s.record_interaction("s1", &format!("qf{i}"), "filler text exchange", Modality::Text, "ok", 300 + i);
        }
        // Compression stride is 10, so a compressed item now exists.
        let bundle = s.build_context(
            "s1",
            &embed_text("what color was the car in the photo"),
            Modality::Image,
            Some(Modality::Image),
            400,
        );
        assert!(!bundle.is_empty());
        let has_image_bank = bundle
            .items
            .iter()
            .any(|i| i.layer == MemoryLayer::ModuleSpecific(Modality::Image));
        assert!(has_image_bank);
        let has_audio_bank = bundle
            .items
            .iter()
            .any(|i| matches!(i.layer, MemoryLayer::ModuleSpecific(Modality::Audio)));
        assert!(!has_audio_bank);
    }

    #[test]
    fn compressed_summary_appears_after_stride() {
        let s = store();
        for i in 0..10 {
            s.record_interaction("s1", &format!("q{i}"), &format!("topic number {i}"), Modality::Text, "ok", i);
        }
        let bundle = s.build_context("s1", &embed_text("topic number 3"), Modality::Text, None, 10);
        assert!(bundle.items.iter().any(|i| i.layer == MemoryLayer::Compressed));
    }

    #[test]
    fn no_bundle_item_scores_below_threshold() {
        let s = store();
        for i in 0..20 {
            s.record_interaction("s1", &format!("q{i}"), &format!("subject {i} discussion"), Modality::Text, "ok", i * 1000);
        }
        let bundle = s.build_context("s1", &embed_text("subject 7 discussion"), Modality::Text, None, 25_000);
        for item in &bundle.items {
            assert!(item.score.total >= s.params().threshold);
        }
    }

    #[test]
    fn budget_keeps_top_scores_and_flags_truncation() {
        let params = MemoryParams { budget_chars: 150, ..Default::default() };
        let s = MemoryStore::new(params);
        for i in 0..20 {
            s.record_interaction(
                "s1",
                &format!("q{i:02}"),
                &format!("a reasonably long exchange about subject {i:02} with padding words"),
                Modality::Text,
                "ok",
                (i * 10) as u64,
            );
        }
        let query = embed_text("subject 19 padding words exchange");
        let bundle = s.build_context("s1", &query, Modality::Text, None, 200);
        assert!(bundle.truncated);
        let used: usize = bundle.items.iter().map(|i| i.content.len()).sum();
        assert!(used <= 150);

        // Sort-and-cut oracle: recompute all scores, sort, greedily pack.
        let sessions = s.sessions.lock().unwrap();
        let session = sessions.get("s1").unwrap();
        let thetas = s.params().drifted(session.full_history.len());
        let mut scored: Vec<(String, String, f64, u8)> = session
            .short_term
            .iter()
            .chain(session.full_history.iter())
            .map(|m| {
                let score = context_score(&m.clone(), &query, Modality::Text, 200, thetas, s.params().tau_decay_ms);
                (m.item_id.clone(), m.content.clone(), score.total, layer_specificity(&m.layer))
            })
            .filter(|(_, _, t, _)| *t >= s.params().threshold)
            .collect();
        scored.sort_by(|a, b| {
            b.2.partial_cmp(&a.2).unwrap().then(a.3.cmp(&b.3)).then(a.0.cmp(&b.0))
        });
        let mut expected = Vec::new();
        let mut budget = 150usize;
        let mut seen: Vec<String> = Vec::new();
        for (id, content, _, _) in scored {
            if seen.contains(&content) {
                continue;
            }
            if content.len() <= budget {
                budget -= content.len();
                seen.push(content.clone());
                expected.push(id);
            }
        }
        let got: Vec<String> = bundle.items.iter().map(|i| i.item_id.clone()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn drift_schedule_shifts_weight_toward_semantics() {
        let p = MemoryParams::default();
        let (s0, t0, m0) = p.drifted(10);
        assert_eq!((s0, t0, m0), (0.5, 0.3, 0.2));
        let (s1, t1, m1) = p.drifted(31);
        assert!((s1 - 0.55).abs() < 1e-12);
        assert!((t1 - 0.25).abs() < 1e-12);
        assert_eq!(m1, 0.2);
        let (s2, t2, _) = p.drifted(1000);
        assert!((s2 - 0.8).abs() < 1e-12);
        assert!(t2 >= 0.0);
    }

    #[test]
    fn last_interaction_reports_modality_and_query_id() {
        let s = store();
        s.record_interaction("s1", "q-image-7", "describe this image", Modality::Image, "a dog", 10);
        let prior = s.last_interaction("s1").unwrap();
        assert_eq!(prior.interaction_id, "q-image-7");
        assert_eq!(prior.modality, Modality::Image);
        assert!(s.last_interaction("nope").is_none());
    }

    #[test]
    fn sessions_round_trip_through_record_files() {
        let dir = std::env::temp_dir().join(format!("polyroute-mem-{}", std::process::id()));
        let s = store();
        s.record_interaction("s1", "q1", "first question\twith tab", Modality::Text, "answer\nnewline", 10);
        s.record_interaction("s1", "q2", "describe the chart", Modality::Image, "bars", 20);
        s.persist_session("s1", &dir).unwrap();

        let restored = store();
        restored.load_session("s1", &dir).unwrap();
        assert_eq!(restored.session_len("s1"), 2);
        assert_eq!(restored.module_bank_len("s1", Modality::Image), 1);
        let prior = restored.last_interaction("s1").unwrap();
        assert_eq!(prior.interaction_id, "q2");
        std::fs::remove_dir_all(&dir).ok();
    }
}
