//! Hierarchical attachment detection and the modality decision tree.
//!
//! Detection tries three tiers strictly in order: declared MIME against a
//! 15-rule first-match-wins table, then a filename extension map, then
//! content analysis (magic-number signatures for binary, UTF-8 validity
//! for text). A query is then assigned one of four input kinds and an
//! execution category for downstream routing.

use serde::{Deserialize, Serialize};

use crate::model::{content_digest, Attachment, ExecutionCategory, InputKind, Modality, Query};
use crate::{Error, Result};

/// One MIME rule: an exact type or a prefix wildcard ending in `*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MimeRule {
    pub pattern: String,
    pub modality: Modality,
}

/// Ordered, first-match-wins MIME table. Exactly 15 rules.
///
/// `application/octet-stream` is deliberately absent: an undeclared binary
/// must fall through to extension and content analysis rather than be
/// classified from a meaningless declared type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MimeCategoryTable {
    pub rules: Vec<MimeRule>,
}

impl MimeCategoryTable {
    pub const RULE_COUNT: usize = 15;

    pub fn bundled() -> Self {
        let rule = |pattern: &str, modality| MimeRule { pattern: pattern.to_string(), modality };
        Self {
            rules: vec![
                rule("application/pdf", Modality::Document),
                rule("image/png", Modality::Image),
                rule("image/jpeg", Modality::Image),
                rule("image/*", Modality::Image),
                rule("audio/wav", Modality::Audio),
                rule("audio/mpeg", Modality::Audio),
                rule("audio/*", Modality::Audio),
                rule("video/mp4", Modality::Video),
                rule("video/*", Modality::Video),
                rule("text/csv", Modality::Document),
                rule("text/*", Modality::Document),
                rule("application/json", Modality::Document),
                rule("application/msword", Modality::Document),
                rule("application/vnd.openxmlformats-officedocument*", Modality::Document),
                rule("application/zip", Modality::Document),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.len() != Self::RULE_COUNT {
            return Err(Error::InvalidConfig(format!(
                "mime table must have exactly {} rules, got {}",
                Self::RULE_COUNT,
                self.rules.len()
            )));
        }
        for required in ["image/*", "audio/*", "video/*", "application/pdf", "text/*"] {
            if !self.rules.iter().any(|r| r.pattern == required) {
                return Err(Error::InvalidConfig(format!("mime table missing `{required}`")));
            }
        }
        Ok(())
    }

    /// First rule matching `mime`, if any. A trailing `*` in the pattern
    /// makes it a prefix match; otherwise the match is exact.
    pub fn lookup(&self, mime: &str) -> Option<Modality> {
        let mime = mime.trim().to_ascii_lowercase();
        if mime.is_empty() {
            return None;
        }
        for rule in &self.rules {
            let hit = match rule.pattern.strip_suffix('*') {
                Some(prefix) => mime.starts_with(prefix),
                None => mime == rule.pattern,
            };
            if hit {
                return Some(rule.modality);
            }
        }
        None
    }
}

/// A magic-number entry: byte signature expected at a fixed offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagicEntry {
    pub signature: Vec<u8>,
    pub offset: usize,
    pub modality: Modality,
}

/// Content signatures for binary files, checked in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagicNumberTable {
    pub entries: Vec<MagicEntry>,
}

impl MagicNumberTable {
    pub fn bundled() -> Self {
        let entry = |signature: &[u8], offset, modality| MagicEntry {
            signature: signature.to_vec(),
            offset,
            modality,
        };
        Self {
            entries: vec![
                entry(&[0xFF, 0xD8, 0xFF], 0, Modality::Image),              // JPEG
                entry(&[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A], 0, Modality::Image), // PNG
                entry(b"GIF8", 0, Modality::Image),
                entry(b"%PDF", 0, Modality::Document),
                entry(b"WAVE", 8, Modality::Audio),                          // RIFF/WAVE
                entry(b"AVI ", 8, Modality::Video),                          // RIFF/AVI
                entry(&[0xFF, 0xFB], 0, Modality::Audio),                    // MP3 sync
                entry(b"ID3", 0, Modality::Audio),                           // MP3 with ID3 tag
                entry(b"ftyp", 4, Modality::Video),                          // MP4 container
                entry(&[0x50, 0x4B, 0x03, 0x04], 0, Modality::Document),     // ZIP
                entry(b"OggS", 0, Modality::Audio),
                entry(&[0x1A, 0x45, 0xDF, 0xA3], 0, Modality::Video),        // Matroska
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<(&[u8], usize)> = Vec::new();
        for e in &self.entries {
            if e.signature.is_empty() {
                return Err(Error::InvalidConfig("empty magic signature".to_string()));
            }
            let key = (e.signature.as_slice(), e.offset);
            if seen.contains(&key) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate magic entry {:02x?} at offset {}",
                    e.signature, e.offset
                )));
            }
            seen.push(key);
        }
        Ok(())
    }

    pub fn lookup(&self, content: &[u8]) -> Option<Modality> {
        for e in &self.entries {
            let end = e.offset + e.signature.len();
            if content.len() >= end && &content[e.offset..end] == e.signature.as_slice() {
                return Some(e.modality);
            }
        }
        None
    }
}

/// Tier-2 filename suffix map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionMap {
    pub entries: Vec<(String, Modality)>,
}

impl ExtensionMap {
    pub fn bundled() -> Self {
        let all: &[(&str, Modality)] = &[
            ("jpg", Modality::Image),
            ("jpeg", Modality::Image),
            ("png", Modality::Image),
            ("gif", Modality::Image),
            ("bmp", Modality::Image),
            ("webp", Modality::Image),
            ("wav", Modality::Audio),
            ("mp3", Modality::Audio),
            ("ogg", Modality::Audio),
            ("flac", Modality::Audio),
            ("m4a", Modality::Audio),
            ("mp4", Modality::Video),
            ("avi", Modality::Video),
            ("mov", Modality::Video),
            ("mkv", Modality::Video),
            ("webm", Modality::Video),
            ("pdf", Modality::Document),
            ("doc", Modality::Document),
            ("docx", Modality::Document),
            ("txt", Modality::Document),
            ("md", Modality::Document),
            ("csv", Modality::Document),
            ("json", Modality::Document),
            ("xlsx", Modality::Document),
            ("pptx", Modality::Document),
        ];
        Self { entries: all.iter().map(|(e, m)| (e.to_string(), *m)).collect() }
    }

    pub fn lookup(&self, ext: &str) -> Option<Modality> {
        self.entries.iter().find(|(e, _)| e == ext).map(|(_, m)| *m)
    }
}

/// All three detection tables as one configuration section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntakeTables {
    pub mime: MimeCategoryTable,
    pub extensions: ExtensionMap,
    pub magic: MagicNumberTable,
}

impl IntakeTables {
    pub fn bundled() -> Self {
        Self {
            mime: MimeCategoryTable::bundled(),
            extensions: ExtensionMap::bundled(),
            magic: MagicNumberTable::bundled(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mime.validate()?;
        self.magic.validate()
    }
}

/// Which tier resolved an attachment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionTier {
    Mime,
    Extension,
    Content,
}

/// Per-attachment detection outcome. `content_length` is recorded as a
/// diagnostic only; it never participates in classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentDetection {
    pub index: usize,
    pub filename: String,
    pub modality: Modality,
    pub tier: DetectionTier,
    pub content_length: usize,
}

/// Intake classification of a whole query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntakeResult {
    pub modality: Modality,
    pub input_kind: InputKind,
    pub execution_category: ExecutionCategory,
    pub per_attachment: Vec<AttachmentDetection>,
    pub transcript: Option<String>,
}

impl IntakeResult {
    /// Distinct detected attachment modalities, sorted.
    pub fn attachment_modalities(&self) -> Vec<Modality> {
        let mut mods: Vec<Modality> = self.per_attachment.iter().map(|d| d.modality).collect();
        mods.sort();
        mods.dedup();
        mods
    }
}

/// Speech-to-text over an audio attachment. Implementations must be pure
/// and deterministic so classification replays exactly.
pub trait AudioTranscriber: Send + Sync {
    fn transcribe(&self, attachment: &Attachment) -> Result<String>;
}

/// Marker read by [`FixtureTranscriber`] inside audio fixture bytes.
pub const TRANSCRIPT_MARKER: &[u8] = b"TRANSCRIPT:";

/// Default transcriber: returns the transcript embedded in the fixture
/// after [`TRANSCRIPT_MARKER`], or a digest-derived placeholder when the
/// fixture carries none. Real ASR plugs in behind the same trait.
#[derive(Debug, Default, Clone)]
pub struct FixtureTranscriber;

impl AudioTranscriber for FixtureTranscriber {
    fn transcribe(&self, attachment: &Attachment) -> Result<String> {
        if let Some(pos) = find_subsequence(&attachment.content, TRANSCRIPT_MARKER) {
            let tail = &attachment.content[pos + TRANSCRIPT_MARKER.len()..];
            let end = tail.iter().position(|&b| b == 0).unwrap_or(tail.len());
            let text = std::str::from_utf8(&tail[..end]).map_err(|e| Error::TranscriberFailure {
                filename: attachment.filename.clone(),
                reason: format!("embedded transcript is not utf-8: {e}"),
            })?;
            return Ok(text.trim().to_string());
        }
        Ok(format!("spoken content {}", &content_digest(&attachment.content)[..8]))
    }
}

fn find_subsequence(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Resolves one attachment through the three tiers, strictly in order.
pub fn detect_attachment(
    attachment: &Attachment,
    tables: &IntakeTables,
) -> Result<(Modality, DetectionTier)> {
    if let Some(modality) = tables.mime.lookup(&attachment.declared_mime) {
        return Ok((modality, DetectionTier::Mime));
    }
    if let Some(ext) = attachment.extension() {
        if let Some(modality) = tables.extensions.lookup(&ext) {
            return Ok((modality, DetectionTier::Extension));
        }
    }
    if let Some(modality) = tables.magic.lookup(&attachment.content) {
        return Ok((modality, DetectionTier::Content));
    }
    if !attachment.content.is_empty() && std::str::from_utf8(&attachment.content).is_ok() {
        return Ok((Modality::Document, DetectionTier::Content));
    }
    Err(Error::UnrecognizedAttachment { filename: attachment.filename.clone() })
}

/// Classifies a query's intake shape: per-attachment modalities, the
/// four-way input kind, overall modality, and execution category. Audio
/// attachments are transcribed before any text routing happens.
///
/// Text accompanying only document attachments stays `Hybrid` with
/// modality `Document` so document QA routes to the document pipeline
/// with the text as the question; text alongside any non-document
/// attachment makes the query `Multimodal`.
pub fn classify_intake(
    query: &Query,
    transcriber: &dyn AudioTranscriber,
    tables: &IntakeTables,
) -> Result<IntakeResult> {
    let mut per_attachment = Vec::with_capacity(query.attachments.len());
    for (index, attachment) in query.attachments.iter().enumerate() {
        let (modality, tier) = detect_attachment(attachment, tables)?;
        per_attachment.push(AttachmentDetection {
            index,
            filename: attachment.filename.clone(),
            modality,
            tier,
            content_length: attachment.size_bytes,
        });
    }

    let mut transcripts = Vec::new();
    for detection in &per_attachment {
        if detection.modality == Modality::Audio {
            let text = transcriber.transcribe(&query.attachments[detection.index])?;
            transcripts.push(text);
        }
    }
    let transcript =
        if transcripts.is_empty() { None } else { Some(transcripts.join("\n")) };

    let has_text = query.has_text();
    let distinct: Vec<Modality> = {
        let mut mods: Vec<Modality> = per_attachment.iter().map(|d| d.modality).collect();
        mods.sort();
        mods.dedup();
        mods
    };

    let input_kind = if has_text && per_attachment.is_empty() {
        InputKind::IndependentText
    } else if has_text {
        InputKind::TextWithAttachments
    } else if per_attachment.len() == 1 && distinct == [Modality::Audio] {
        InputKind::AudioRecording
    } else {
        InputKind::IndependentAttachments
    };

    let modality = if per_attachment.is_empty() {
        Modality::Text
    } else if distinct.len() > 1 || (has_text && distinct != [Modality::Document]) {
        Modality::Multimodal
    } else {
        distinct[0]
    };

    let execution_category = match input_kind {
        InputKind::IndependentText => ExecutionCategory::TextOnly,
        InputKind::TextWithAttachments => ExecutionCategory::Hybrid,
        InputKind::IndependentAttachments | InputKind::AudioRecording => {
            ExecutionCategory::NonText
        }
    };

    Ok(IntakeResult { modality, input_kind, execution_category, per_attachment, transcript })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UserPolicy;

    fn query_with(text: &str, attachments: Vec<Attachment>) -> Query {
        Query::new("q", text, attachments, "s", UserPolicy::default(), 0).unwrap()
    }

    #[test]
    fn bundled_tables_validate() {
        let tables = IntakeTables::bundled();
        tables.validate().unwrap();
        assert_eq!(tables.mime.rules.len(), 15);
        assert!(tables.magic.entries.len() >= 10);
    }

    #[test]
    fn declared_pdf_resolves_at_mime_tier() {
        let a = Attachment::new("report", "application/pdf", b"whatever".to_vec()).unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Document, DetectionTier::Mime));
    }

    #[test]
    fn mp4_extension_resolves_at_extension_tier() {
        let a = Attachment::new("clip.mp4", "", vec![0u8; 16]).unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Video, DetectionTier::Extension));
    }

    #[test]
    fn jpeg_magic_resolves_at_content_tier() {
        let a = Attachment::new("blob.bin", "", vec![0xFF, 0xD8, 0xFF, 0xE0, 0x00]).unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Image, DetectionTier::Content));
    }

    #[test]
    fn utf8_content_falls_back_to_document() {
        let a = Attachment::new("notes.unknownext", "", b"plain notes".to_vec()).unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Document, DetectionTier::Content));
    }

    #[test]
    fn unrecognized_binary_is_an_error_not_a_crash() {
        let a = Attachment::new("mystery.zzz", "", vec![0x00, 0x01, 0x02, 0xFE]).unwrap();
        let err = detect_attachment(&a, &IntakeTables::bundled());
        assert!(matches!(err, Err(Error::UnrecognizedAttachment { .. })));
    }

    #[test]
    fn tier_one_preempts_later_tiers() {
        // Declared mime says pdf even though the name and bytes say png.
        let mut content = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
        content.extend_from_slice(&[0; 8]);
        let a = Attachment::new("shot.png", "application/pdf", content).unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Document, DetectionTier::Mime));
    }

    #[test]
    fn octet_stream_defers_to_content_analysis() {
        let a = Attachment::new(
            "photo.opaque",
            "application/octet-stream",
            vec![0xFF, 0xD8, 0xFF, 0xE1],
        )
        .unwrap();
        let got = detect_attachment(&a, &IntakeTables::bundled()).unwrap();
        assert_eq!(got, (Modality::Image, DetectionTier::Content));
    }

    #[test]
    fn plain_text_query_is_text_only() {
        let q = query_with("summarize this", Vec::new());
        let r = classify_intake(&q, &FixtureTranscriber, &IntakeTables::bundled()).unwrap();
        assert_eq!(r.modality, Modality::Text);
        assert_eq!(r.input_kind, InputKind::IndependentText);
        assert_eq!(r.execution_category, ExecutionCategory::TextOnly);
        assert!(r.transcript.is_none());
    }

    #[test]
    fn lone_png_is_independent_attachments() {
        let png = Attachment::new("pic.png", "image/png", vec![0x89, 0x50]).unwrap();
        let q = query_with("", vec![png]);
        let r = classify_intake(&q, &FixtureTranscriber, &IntakeTables::bundled()).unwrap();
        assert_eq!(r.modality, Modality::Image);
        assert_eq!(r.input_kind, InputKind::IndependentAttachments);
        assert_eq!(r.execution_category, ExecutionCategory::NonText);
    }

    #[test]
    fn text_plus_pdf_and_wav_is_multimodal_hybrid_with_transcript() {
        let pdf = Attachment::new("report.pdf", "application/pdf", b"%PDF-1.4".to_vec()).unwrap();
        let mut wav = b"RIFF\x00\x00\x00\x00WAVE".to_vec();
        wav.extend_from_slice(TRANSCRIPT_MARKER);
        wav.extend_from_slice(b"quarterly numbers look fine\x00");
        let wav = Attachment::new("memo.wav", "audio/wav", wav).unwrap();
        let q = query_with("compare the memo to the report", vec![pdf, wav]);
        let r = classify_intake(&q, &FixtureTranscriber, &IntakeTables::bundled()).unwrap();
        assert_eq!(r.modality, Modality::Multimodal);
        assert_eq!(r.input_kind, InputKind::TextWithAttachments);
        assert_eq!(r.execution_category, ExecutionCategory::Hybrid);
        assert_eq!(r.transcript.as_deref(), Some("quarterly numbers look fine"));
    }

    #[test]
    fn text_with_document_stays_document_hybrid() {
        let pdf = Attachment::new("paper.pdf", "application/pdf", b"%PDF".to_vec()).unwrap();
        let q = query_with("what does section two claim?", vec![pdf]);
        let r = classify_intake(&q, &FixtureTranscriber, &IntakeTables::bundled()).unwrap();
        assert_eq!(r.modality, Modality::Document);
        assert_eq!(r.execution_category, ExecutionCategory::Hybrid);
    }

    #[test]
    fn lone_wav_is_audio_recording() {
        let mut wav = b"RIFF\x00\x00\x00\x00WAVE".to_vec();
        wav.extend_from_slice(TRANSCRIPT_MARKER);
        wav.extend_from_slice(b"hello there\x00");
        let wav = Attachment::new("note.wav", "audio/wav", wav).unwrap();
        let q = query_with("", vec![wav]);
        let r = classify_intake(&q, &FixtureTranscriber, &IntakeTables::bundled()).unwrap();
        assert_eq!(r.input_kind, InputKind::AudioRecording);
        assert_eq!(r.execution_category, ExecutionCategory::NonText);
        assert_eq!(r.modality, Modality::Audio);
        assert_eq!(r.transcript.as_deref(), Some("hello there"));
    }

    #[test]
    fn identical_bytes_give_identical_results() {
        let png = Attachment::new("a.png", "image/png", vec![1, 2, 3]).unwrap();
        let q = query_with("what is this?", vec![png]);
        let tables = IntakeTables::bundled();
        let r1 = classify_intake(&q, &FixtureTranscriber, &tables).unwrap();
        let r2 = classify_intake(&q, &FixtureTranscriber, &tables).unwrap();
        assert_eq!(r1, r2);
    }
}
