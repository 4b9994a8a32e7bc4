//! Bundled labeled corpus: 1,300 records, 100 per task category, built
//! from authored templates with seeded fill-ins, plus the attachment
//! fixtures and tool annotations they reference and a 200-item
//! validation set for threshold calibration.
//!
//! Every record carries gold labels (category, modality, execution
//! category, cost tier, optional follow-up target), a pair of annotator
//! labels for agreement metrics, and a provenance note naming its
//! template. Follow-up records share a session with a non-text anchor
//! that appears earlier in corpus order. Generation is a pure function
//! of the seed; the bundled corpus uses the default seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::SplitMix64;
use crate::complexity::ValidationItem;
use crate::couplet::{AnnotationStore, PerceptionTool, Region, ToolRecord};
use crate::intake::TRANSCRIPT_MARKER;
use crate::model::{
    Attachment, CostTier, ExecutionCategory, Modality, Query, TaskCategory, UserPolicy,
};
use crate::{Error, Result};

/// Seed of the bundled corpus files.
pub const BUNDLED_CORPUS_SEED: u64 = 42;

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    /// Fixture refs, resolved against the corpus fixture set.
    pub attachments: Vec<String>,
    pub policy: UserPolicy,
    pub session_id: String,
    pub arrived_at: u64,
    pub gold_category: TaskCategory,
    pub gold_modality: Modality,
    pub gold_execution: ExecutionCategory,
    pub gold_tier: CostTier,
    pub followup_target: Option<String>,
    pub annotator_a: TaskCategory,
    pub annotator_b: TaskCategory,
    /// Provenance: template family and fill-in index.
    pub note: String,
}

/// One bundled binary fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub declared_mime: String,
    pub bytes: Vec<u8>,
}

/// All fixtures of a corpus, keyed by relative ref.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub files: BTreeMap<String, FixtureFile>,
}

impl FixtureSet {
    pub fn get(&self, name: &str) -> Result<&FixtureFile> {
        self.files.get(name).ok_or_else(|| Error::CorpusError {
            index: 0,
            reason: format!("fixture ref `{name}` does not resolve"),
        })
    }
}

/// A complete generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
    pub fixtures: FixtureSet,
    pub annotations: AnnotationStore,
}

impl Corpus {
    /// Materializes one record into an executable query.
    pub fn query_for(&self, record: &CorpusRecord) -> Result<Query> {
        let mut attachments = Vec::with_capacity(record.attachments.len());
        for name in &record.attachments {
            let fixture = self.fixtures.get(name)?;
            attachments.push(Attachment::new(
                name.clone(),
                fixture.declared_mime.clone(),
                fixture.bytes.clone(),
            )?);
        }
        Query::new(
            record.id.clone(),
            record.text.clone(),
            attachments,
            record.session_id.clone(),
            record.policy,
            record.arrived_at,
        )
    }

    /// Serializes records as JSONL, one record per line.
    pub fn records_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes corpus.jsonl, validation.jsonl, fixtures/, and
    /// annotations.json under `dir`.
    pub fn write_to_dir(&self, dir: &Path, validation: &[ValidationItem]) -> Result<()> {
        std::fs::create_dir_all(dir.join("fixtures"))?;
        let mut corpus_file = std::fs::File::create(dir.join("corpus.jsonl"))?;
        corpus_file.write_all(self.records_jsonl()?.as_bytes())?;
        let mut validation_file = std::fs::File::create(dir.join("validation.jsonl"))?;
        for item in validation {
            writeln!(validation_file, "{}", serde_json::to_string(item)?)?;
        }
        for (name, fixture) in &self.fixtures.files {
            std::fs::write(dir.join("fixtures").join(name), &fixture.bytes)?;
        }
        // Declared mimes ride alongside the raw fixture bytes.
        let mimes: BTreeMap<&String, &String> =
            self.fixtures.files.iter().map(|(k, v)| (k, &v.declared_mime)).collect();
        std::fs::write(dir.join("fixture_mimes.json"), serde_json::to_string_pretty(&mimes)?)?;
        std::fs::write(
            dir.join("annotations.json"),
            serde_json::to_string_pretty(&self.annotations)?,
        )?;
        Ok(())
    }

    /// Reads a corpus previously written by [`Corpus::write_to_dir`].
    pub fn read_from_dir(dir: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(dir.join("corpus.jsonl"))?;
        let mut records = Vec::new();
        for (index, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: CorpusRecord =
                serde_json::from_str(line).map_err(|e| Error::CorpusError {
                    index,
                    reason: e.to_string(),
                })?;
            records.push(record);
        }
        let mimes: BTreeMap<String, String> =
            serde_json::from_str(&std::fs::read_to_string(dir.join("fixture_mimes.json"))?)?;
        let mut files = BTreeMap::new();
        for (name, declared_mime) in mimes {
            let bytes = std::fs::read(dir.join("fixtures").join(&name))?;
            files.insert(name, FixtureFile { declared_mime, bytes });
        }
        let annotations: AnnotationStore =
            serde_json::from_str(&std::fs::read_to_string(dir.join("annotations.json"))?)?;
        Ok(Self { records, fixtures: FixtureSet { files }, annotations })
    }
}

const SUBJECTS: [&str; 10] = [
    "the quarterly revenue report",
    "the migration checklist",
    "the northern field survey",
    "the onboarding handbook",
    "the warehouse inventory",
    "the customer churn study",
    "the release announcement",
    "the travel expense policy",
    "the sensor maintenance log",
    "the harvest planning memo",
];

const TOPICS: [&str; 10] = [
    "glacier retreat in the alps",
    "the spice trade routes",
    "urban beekeeping",
    "the history of typewriters",
    "tidal power generation",
    "the antikythera mechanism",
    "desert farming techniques",
    "the voyage of the beagle",
    "medieval bridge construction",
    "deep sea bioluminescence",
];

fn math_efficient(i: usize) -> String {
    let a = 3 + (i % 7);
    let b = 4 + (i % 11);
    let c = 19 + (i % 23);
    match i % 6 {
        0 => format!("Solve for x in the equation {a}x + {b} = {c}."),
        1 => format!("Calculate the remainder of {c}{b} divided by {a}."),
        2 => format!("Compute the probability of rolling a sum of {} with two dice.", 5 + (i % 7)),
        3 => format!("Solve the equation {a}y - {b} = {c} for y."),
        4 => format!("Calculate {a} times {b} plus {c} minus four."),
        _ => format!("Compute the slope between the points ({a}, {b}) and ({b}, {c})."),
    }
}

fn math_premium(i: usize) -> String {
    let a = 2 + (i % 5);
    let b = 3 + (i % 7);
    match i % 4 {
        0 => format!(
            "Prove the theorem that the integral of f(x) = {a}*x^2 + {b}*x over [0, 2] equals the \
             stated bound, compute the derivative of g(x) = x^3 - {a}*x at x = {b}, and calculate \
             the probability that two fair dice sum to seven given the first die is even \
             (express every answer as an exact fraction)."
        ),
        1 => format!(
            "Solve the system {{x + {a}*y = {b}, {a}*x - y = {b}}} with full working, prove the \
             solution is unique via the determinant, and compute the matrix inverse by hand, \
             checking the algebra at each elimination step (show the condition number estimate)."
        ),
        2 => format!(
            "Calculate the sum of the geometric series with ratio 1/{a} and first term {b}, \
             prove convergence from the definition of a limit, compute the derivative of the \
             partial sum formula s_n = a*(1 - r^n)/(1 - r) with respect to r, and evaluate it at \
             the parameter set {{r = 0.5, n = {b}}} (simplify all exponents)."
        ),
        _ => format!(
            "Prove by induction that the identity 1 + 2 + 3 = n*(n+1)/2 holds for every natural \
             number, compute the closed form at n = {b}{a}, and calculate the probability that a \
             uniformly random integer drawn from the set {{0, 1, x = 99}} satisfies the equation \
             x^2 = x (justify each step rigorously)."
        ),
    }
}

fn coding_efficient(i: usize) -> String {
    match i % 6 {
        0 => format!("Generate code to sort a list of {} pairs by their second field.", 3 + i % 9),
        1 => "Write a function that reverses the words of a sentence.".to_string(),
        2 => format!("Generate code to count vowels in a string of length {}.", 10 + i % 50),
        3 => "Write a function that merges two sorted arrays into one.".to_string(),
        4 => "Generate code to deduplicate a list while keeping order.".to_string(),
        _ => format!("Write a function that checks whether {} is a leap year.", 1900 + i),
    }
}

fn coding_premium(i: usize) -> String {
    let n = 2 + (i % 4);
    match i % 3 {
        0 => format!(
            "Refactor the python function ```def f(xs): return [x*{n} for x in xs if x % 2 == 0]``` \
             so it streams results lazily, add a unit test that covers the empty input case, and \
             debug the stack trace raised when xs mixes strings with integers (include the fixed \
             code and a short root-cause note)."
        ),
        1 => format!(
            "Debug this python snippet ```def walk(d, k): return d[k] + walk(d, d[k])``` which \
             recurses forever on cyclic inputs, refactor it with an explicit visited set sized \
             for {n}000 keys, and write a unit test proving the regex r'^[a-z]+$' still validates \
             every key (keep the behavior identical for acyclic inputs)."
        ),
        _ => format!(
            "Implement a parser for log lines shaped like ```{{\"ts\": 171{n}, \"level\": \
             \"warn\", \"msg\": \"...\"}}```, compile a regex that rejects malformed levels, and \
             write a unit test matrix covering truncated json, duplicate keys, and a {n} \
             gigabyte stream processed lazily (document the failure modes in code comments)."
        ),
    }
}

fn summarization_efficient(i: usize) -> String {
    let topic = TOPICS[i % TOPICS.len()];
    match i % 5 {
        0 => format!("Summarize this article about {topic} in three sentences."),
        1 => format!("Rewrite the opening paragraph of an essay on {topic} to be friendlier."),
        2 => format!("Paraphrase the key claim of a lecture about {topic}."),
        3 => format!("Draft a polite reply declining an invitation to speak about {topic}."),
        _ => format!("Condense a long memo about {topic} into five bullet points."),
    }
}

fn summarization_premium(i: usize) -> String {
    let n = 2 + (i % 7);
    match i % 2 {
        0 => format!(
            "Rewrite the release notes ```{{\"fix\": \"parser off-by-one\", \"feat\": \"cache \
             layer\", \"perf\": \"{n}x faster scans\"}}``` as a flowing paragraph for customers, \
             condense the jargon, keep every number verbatim, and proofread the result for \
             passive voice (the final text must stay under 120 words)."
        ),
        _ => format!(
            "Summarize the incident postmortem ```{{\"outage_minutes\": {n}4, \"root_cause\": \
             \"lock contention\", \"followups\": {n}}}``` for an executive audience, rewrite the \
             action items as commitments with owners, condense the timeline to its three \
             pivotal moments, and proofread the figures so the json values stay verbatim."
        ),
    }
}

fn general_text(i: usize) -> String {
    let topic = TOPICS[i % TOPICS.len()];
    match i % 6 {
        0 => format!("What is the main idea behind {topic}?"),
        1 => format!("Explain why {topic} mattered historically."),
        2 => format!("Tell me about {topic} for a curious beginner."),
        3 => format!("What is the difference between {topic} and its modern form?"),
        4 => format!("Who was the most influential figure in {topic}?"),
        _ => format!("Explain how {topic} works in everyday terms."),
    }
}

fn vision_text(i: usize) -> String {
    match i % 5 {
        0 => "What is shown in this image and what stands out most?".to_string(),
        1 => "Describe the scene in the picture including the weather.".to_string(),
        2 => "Describe what the people in this photo are doing.".to_string(),
        3 => "What landmark is shown in the picture and when was it likely taken?".to_string(),
        _ => "Describe the mood and lighting of this image.".to_string(),
    }
}

fn document_text(i: usize) -> String {
    let subject = SUBJECTS[i % SUBJECTS.len()];
    match i % 4 {
        0 => format!("What does the attached document say about {subject}?"),
        1 => "Which clause of the attached contract covers early termination?".to_string(),
        2 => "Find the invoice total and the due date in the attachment.".to_string(),
        _ => format!("Quote the paragraph of the attachment that mentions {subject}."),
    }
}

fn image_gen_text(i: usize) -> String {
    let subject = [
        "a lighthouse at dawn",
        "a fox curled under ferns",
        "a tram crossing a snowy bridge",
        "an observatory on a cliff",
        "a kettle shaped like a whale",
        "a paper boat on a puddle",
        "a greenhouse full of cacti",
        "a violin made of glass",
        "a street market at dusk",
        "a robot tending sunflowers",
    ][i % 10];
    match i % 3 {
        0 => format!("Generate an image of {subject} in watercolor style."),
        1 => format!("Render an image of {subject} with dramatic backlight."),
        _ => format!("Create an illustration of {subject} for a children's book."),
    }
}

fn audio_text(i: usize) -> String {
    match i % 3 {
        0 => "Transcribe this audio recording of the standup meeting.".to_string(),
        1 => "Transcribe the recording and note who proposed the budget change.".to_string(),
        _ => "Transcribe this audio clip of the customer interview.".to_string(),
    }
}

fn video_text(i: usize) -> String {
    match i % 3 {
        0 => "Summarize the key content of this video for the release notes.".to_string(),
        1 => "Describe what happens in the opening scene of this video.".to_string(),
        _ => "List the main scenes of this video with rough timestamps.".to_string(),
    }
}

fn object_detect_text(i: usize) -> String {
    match i % 5 {
        0 => "Count the cars and delivery vans parked along the north side of the market square \
              in this photo and list every single one you can find with its rough position."
            .to_string(),
        1 => "Detect all the objects visible on the workshop bench in this image and label each \
              one you find so the inventory team can reconcile the full list against the ledger."
            .to_string(),
        2 => "How many people are waiting on the platform in this picture? Count the ones \
              standing near the yellow line separately and include anyone partially hidden."
            .to_string(),
        3 => "Find all the animals in this trail camera image, count them by kind, and flag \
              any frame region where you are not confident about what the detector found."
            .to_string(),
        _ => "Detect and count the traffic signs in this intersection photo, list each sign you \
              locate from left to right, and mention any that are partly occluded by the trees."
            .to_string(),
    }
}

fn complex_text(i: usize) -> String {
    let subject = SUBJECTS[i % SUBJECTS.len()];
    match i % 4 {
        0 => format!(
            "Translate {subject} from french into plain english, then chart its totals by \
             region and flag any quarter where the growth rate fell below two percent overall."
        ),
        1 => format!(
            "Outline {subject} section by section, then write a short quiz of five questions \
             covering the outline and also draft an answer key with one-line explanations."
        ),
        2 => format!(
            "Extract the figures from {subject}, then compose a narrative summary around the \
             extracted figures and also propose two follow-up analyses worth running next."
        ),
        _ => format!(
            "Summarize {subject} for the leadership group, then rewrite the summary as a \
             customer announcement and also list the open risks that the announcement omits."
        ),
    }
}

fn ambiguous_text(i: usize) -> String {
    [
        "help me out with this one",
        "make it better please",
        "sort this whole mess out",
        "can you handle it for me",
        "do the usual thing again",
        "take care of the rest",
        "you know what i need here",
        "just get this over the line",
        "same as before but nicer",
        "whatever works best honestly",
    ][i % 10]
        .to_string()
}

fn text_moe_text(i: usize) -> String {
    // Index 0-94 use anaphoric triggers; the rest rely on semantic
    // overlap with the anchor's stored context.
    if i % 100 < 95 {
        [
            "what color is the car in it?",
            "zoom into the left side of that image and tell me more",
            "is the person in it wearing a coat?",
            "how many windows does the building in that image have?",
            "does it look like the photo was taken at noon?",
        ][i % 5]
            .to_string()
    } else {
        "tell me more about the scene shown in the street photo".to_string()
    }
}

fn audio_transcript(i: usize) -> String {
    let subject = SUBJECTS[i % SUBJECTS.len()];
    match i % 4 {
        0 => format!(
            "the team agreed to move the launch to the first week of may and {subject} will be \
             updated before the next review"
        ),
        1 => format!(
            "action items are as follows first revise {subject} second confirm the vendor quote \
             third schedule the dry run for thursday"
        ),
        2 => format!(
            "the customer said the new flow feels faster but asked that {subject} explain the \
             billing change in plain language"
        ),
        _ => format!(
            "attendance was low today so decisions on {subject} were deferred and the owner \
             will circulate notes by friday"
        ),
    }
}

struct FixturePools {
    images: Vec<String>,
    detect_images: Vec<String>,
    pdfs: Vec<String>,
    csvs: Vec<String>,
    txts: Vec<String>,
    wavs: Vec<String>,
    mp3s: Vec<String>,
    mp4s: Vec<String>,
    mkvs: Vec<String>,
}

fn seeded_filler(rng: &mut SplitMix64, len: usize) -> Vec<u8> {
    (0..len).map(|_| (rng.next_u64() % 251) as u8).collect()
}

fn build_fixtures(rng: &mut SplitMix64) -> (FixtureSet, AnnotationStore, FixturePools) {
    let mut files = BTreeMap::new();
    let mut pools = FixturePools {
        images: Vec::new(),
        detect_images: Vec::new(),
        pdfs: Vec::new(),
        csvs: Vec::new(),
        txts: Vec::new(),
        wavs: Vec::new(),
        mp3s: Vec::new(),
        mp4s: Vec::new(),
        mkvs: Vec::new(),
    };

    for i in 0..12 {
        let name = format!("img_{i:02}.png");
        let mut bytes = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
        bytes.extend(seeded_filler(rng, 24 + i));
        // Two of them arrive with no useful declared type so the later
        // detection tiers get exercised on real corpus traffic.
        let declared_mime = match i {
            10 => String::new(),
            11 => "application/octet-stream".to_string(),
            _ => "image/png".to_string(),
        };
        files.insert(name.clone(), FixtureFile { declared_mime, bytes });
        pools.images.push(name);
    }
    for i in 0..6 {
        let name = format!("shot_{i:02}.jpg");
        let mut bytes = vec![0xFF, 0xD8, 0xFF, 0xE0];
        bytes.extend(seeded_filler(rng, 20 + i));
        files.insert(
            name.clone(),
            FixtureFile { declared_mime: "image/jpeg".to_string(), bytes },
        );
        pools.images.push(name);
    }

    let mut annotations = AnnotationStore::default();
    let label_pool =
        ["car", "person", "dog", "bicycle", "bus", "tree", "sign", "cat", "truck", "bench"];
    for i in 0..12 {
        let name = format!("det_{i:02}.png");
        let mut bytes = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0xDE];
        bytes.extend(seeded_filler(rng, 30 + i));
        let fixture = FixtureFile { declared_mime: "image/png".to_string(), bytes };
        let digest = crate::model::content_digest(&fixture.bytes);
        let record_count = 2;
        let mut records = Vec::new();
        for k in 0..record_count {
            let label = label_pool[((rng.next_u64() as usize) + k) % label_pool.len()];
            let score = 0.60 + rng.next_f64() * 0.38;
            records.push(ToolRecord {
                label: label.to_string(),
                score: (score * 100.0).round() / 100.0,
                region: Some(Region {
                    x: (rng.next_u64() % 100) as u32,
                    y: (rng.next_u64() % 100) as u32,
                    width: 10 + (rng.next_u64() % 50) as u32,
                    height: 10 + (rng.next_u64() % 50) as u32,
                }),
                span: None,
            });
        }
        let mut dedup: Vec<ToolRecord> = Vec::new();
        for r in records {
            if !dedup.iter().any(|d| d.label == r.label) {
                dedup.push(r);
            }
        }
        let mut by_tool = BTreeMap::new();
        by_tool.insert(PerceptionTool::ObjectDetector, dedup);
        annotations.by_digest.insert(digest, by_tool);
        files.insert(name.clone(), fixture);
        pools.detect_images.push(name);
    }

    for i in 0..10 {
        let name = format!("report_{i:02}.pdf");
        let mut bytes = b"%PDF-1.4\n".to_vec();
        bytes.extend(format!("stream about {}\n", SUBJECTS[i % SUBJECTS.len()]).into_bytes());
        bytes.extend(seeded_filler(rng, 30));
        files.insert(
            name.clone(),
            FixtureFile { declared_mime: "application/pdf".to_string(), bytes },
        );
        pools.pdfs.push(name);
    }
    for i in 0..5 {
        let name = format!("table_{i:02}.csv");
        let bytes = format!(
            "item,qty,price\nwidget,{},{}\nbracket,{},{}\n",
            1 + i,
            10 + i,
            2 + i,
            20 + i
        )
        .into_bytes();
        files
            .insert(name.clone(), FixtureFile { declared_mime: "text/csv".to_string(), bytes });
        pools.csvs.push(name);
    }
    for i in 0..5 {
        let name = format!("notes_{i:02}.txt");
        let bytes =
            format!("meeting notes covering {}\nline two\n", SUBJECTS[i % SUBJECTS.len()])
                .into_bytes();
        // Empty declared type: resolves at the extension tier.
        files.insert(name.clone(), FixtureFile { declared_mime: String::new(), bytes });
        pools.txts.push(name);
    }

    for i in 0..20 {
        let name = format!("voice_{i:02}.wav");
        let mut bytes = b"RIFF\x24\x00\x00\x00WAVE".to_vec();
        bytes.extend_from_slice(TRANSCRIPT_MARKER);
        bytes.extend(audio_transcript(i).into_bytes());
        bytes.push(0);
        bytes.extend(seeded_filler(rng, 16));
        files
            .insert(name.clone(), FixtureFile { declared_mime: "audio/wav".to_string(), bytes });
        pools.wavs.push(name);
    }
    for i in 0..5 {
        let name = format!("song_{i:02}.mp3");
        let mut bytes = b"ID3\x03\x00".to_vec();
        bytes.extend_from_slice(TRANSCRIPT_MARKER);
        bytes.extend(audio_transcript(i + 7).into_bytes());
        bytes.push(0);
        bytes.extend(seeded_filler(rng, 12));
        files
            .insert(name.clone(), FixtureFile { declared_mime: "audio/mpeg".to_string(), bytes });
        pools.mp3s.push(name);
    }

    for i in 0..12 {
        let name = format!("clip_{i:02}.mp4");
        let mut bytes = vec![0x00, 0x00, 0x00, 0x18];
        bytes.extend_from_slice(b"ftypisom");
        bytes.extend(seeded_filler(rng, 24));
        let declared_mime =
            if i < 10 { "video/mp4".to_string() } else { String::new() };
        files.insert(name.clone(), FixtureFile { declared_mime, bytes });
        pools.mp4s.push(name);
    }
    for i in 0..4 {
        let name = format!("scene_{i:02}.mkv");
        let mut bytes = vec![0x1A, 0x45, 0xDF, 0xA3];
        bytes.extend(seeded_filler(rng, 20));
        // No declared type and a less common suffix: magic numbers decide.
        files.insert(name.clone(), FixtureFile { declared_mime: String::new(), bytes });
        pools.mkvs.push(name);
    }

    (FixtureSet { files }, annotations, pools)
}

/// Generates the full 1,300-record corpus for `seed`.
pub fn generate_corpus(seed: u64) -> Corpus {
    let mut rng = SplitMix64::new(seed ^ 0x00c0_ffee);
    let (fixtures, annotations, pools) = build_fixtures(&mut rng);

    let mut records: Vec<CorpusRecord> = Vec::with_capacity(1300);
    let mut arrived = 0u64;
    let mut vision_anchor_sessions: Vec<(String, String)> = Vec::new();

    let confusable = |category: TaskCategory| -> TaskCategory {
        use TaskCategory::*;
        match category {
            Math => Coding,
            Coding => Math,
            SummarizationWriting => General,
            Vision => ObjectDetect,
            Document => Vision,
            ImageGen => Vision,
            Audio => Video,
            Video => Audio,
            TextMoe => General,
            ObjectDetect => Vision,
            Complex => Ambiguous,
            Ambiguous => General,
            General => Ambiguous,
        }
    };

    // Block order keeps every follow-up anchor ahead of its follow-up.
    let categories = [
        TaskCategory::Math,
        TaskCategory::Coding,
        TaskCategory::SummarizationWriting,
        TaskCategory::General,
        TaskCategory::Vision,
        TaskCategory::Document,
        TaskCategory::Audio,
        TaskCategory::Video,
        TaskCategory::ImageGen,
        TaskCategory::ObjectDetect,
        TaskCategory::Complex,
        TaskCategory::Ambiguous,
        TaskCategory::TextMoe,
    ];

    for category in categories {
        for i in 0..100usize {
            let index = records.len();
            let id = format!("r{index:04}");
            arrived += 1000;
            let mut session_id = format!("sess-{id}");
            let mut text;
            let mut attachments: Vec<String> = Vec::new();
            let gold_modality;
            let gold_execution;
            let mut gold_tier = CostTier::Efficient;
            let mut followup_target = None;
            let note;

            match category {
                TaskCategory::Math | TaskCategory::Coding => {
                    let premium = i >= 68;
                    text = if category == TaskCategory::Math {
                        if premium { math_premium(i) } else { math_efficient(i) }
                    } else if premium {
                        coding_premium(i)
                    } else {
                        coding_efficient(i)
                    };
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    gold_tier = if premium { CostTier::Premium } else { CostTier::Efficient };
                    note = format!("{category} template {} tier {gold_tier:?}", i % 10);
                }
                TaskCategory::SummarizationWriting => {
                    let premium = i >= 88;
                    text = if premium {
                        summarization_premium(i)
                    } else {
                        summarization_efficient(i)
                    };
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    gold_tier = if premium { CostTier::Premium } else { CostTier::Efficient };
                    note = format!("summarization template {}", i % 10);
                }
                TaskCategory::General => {
                    text = general_text(i);
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    note = format!("general template {}", i % 10);
                }
                TaskCategory::Vision => {
                    let image = pools.images[i % pools.images.len()].clone();
                    attachments.push(image);
                    if i < 80 {
                        text = vision_text(i);
                        gold_modality = Modality::Multimodal;
                        gold_execution = ExecutionCategory::Hybrid;
                    } else {
                        text = String::new();
                        gold_modality = Modality::Image;
                        gold_execution = ExecutionCategory::NonText;
                    }
                    session_id = format!("sess-follow-{}", i);
                    vision_anchor_sessions.push((session_id.clone(), id.clone()));
                    note = format!("vision template {}", i % 5);
                }
                TaskCategory::Document => {
                    let doc = match i % 3 {
                        0 => pools.pdfs[i % pools.pdfs.len()].clone(),
                        1 => pools.csvs[i % pools.csvs.len()].clone(),
                        _ => pools.txts[i % pools.txts.len()].clone(),
                    };
                    attachments.push(doc);
                    if i < 80 {
                        text = document_text(i);
                        gold_execution = ExecutionCategory::Hybrid;
                    } else {
                        text = String::new();
                        gold_execution = ExecutionCategory::NonText;
                    }
                    gold_modality = Modality::Document;
                    note = format!("document template {}", i % 4);
                }
                TaskCategory::Audio => {
                    let clip = if i % 5 == 4 {
                        pools.mp3s[i % pools.mp3s.len()].clone()
                    } else {
                        pools.wavs[i % pools.wavs.len()].clone()
                    };
                    attachments.push(clip);
                    if i < 85 {
                        text = String::new();
                        gold_modality = Modality::Audio;
                        gold_execution = ExecutionCategory::NonText;
                    } else {
                        text = audio_text(i);
                        gold_modality = Modality::Multimodal;
                        gold_execution = ExecutionCategory::Hybrid;
                    }
                    note = format!("audio fixture {}", i % 20);
                }
                TaskCategory::Video => {
                    let clip = if i % 6 == 5 {
                        pools.mkvs[i % pools.mkvs.len()].clone()
                    } else {
                        pools.mp4s[i % pools.mp4s.len()].clone()
                    };
                    attachments.push(clip);
                    if i < 80 {
                        text = String::new();
                        gold_modality = Modality::Video;
                        gold_execution = ExecutionCategory::NonText;
                    } else {
                        text = video_text(i);
                        gold_modality = Modality::Multimodal;
                        gold_execution = ExecutionCategory::Hybrid;
                    }
                    gold_tier = CostTier::Premium;
                    note = format!("video fixture {}", i % 12);
                }
                TaskCategory::ImageGen => {
                    text = image_gen_text(i);
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    gold_tier = CostTier::Premium;
                    note = format!("image_gen template {}", i % 3);
                }
                TaskCategory::ObjectDetect => {
                    attachments.push(pools.detect_images[i % pools.detect_images.len()].clone());
                    text = object_detect_text(i);
                    gold_modality = Modality::Multimodal;
                    gold_execution = ExecutionCategory::Hybrid;
                    note = format!("object_detect template {}", i % 5);
                }
                TaskCategory::Complex => {
                    text = complex_text(i);
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    note = format!("complex template {}", i % 4);
                }
                TaskCategory::Ambiguous => {
                    text = ambiguous_text(i);
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::TextOnly;
                    note = format!("ambiguous template {}", i % 10);
                }
                TaskCategory::TextMoe => {
                    let (anchor_session, anchor_id) = vision_anchor_sessions[i].clone();
                    session_id = anchor_session;
                    followup_target = Some(anchor_id);
                    text = text_moe_text(i);
                    gold_modality = Modality::Text;
                    gold_execution = ExecutionCategory::FollowUp;
                    note = format!("text_moe template {} anchored", i % 5);
                }
            }

            // Blank-text attachment records keep a canonical empty text.
            if attachments.is_empty() && text.is_empty() {
                text = "untitled request".to_string();
            }

            let annotator_a = category;
            let annotator_b =
                if rng.next_f64() < 0.95 { category } else { confusable(category) };

            records.push(CorpusRecord {
                id,
                text,
                attachments,
                policy: UserPolicy::auto_unlimited(),
                session_id,
                arrived_at: arrived,
                gold_category: category,
                gold_modality,
                gold_execution,
                gold_tier,
                followup_target,
                annotator_a,
                annotator_b,
                note,
            });
        }
    }

    Corpus { records, fixtures, annotations }
}

/// 200-item validation set for threshold calibration: an even split of
/// efficient and premium text templates with gold tiers.
pub fn generate_validation(seed: u64) -> Vec<ValidationItem> {
    let mut rng = SplitMix64::new(seed ^ 0x5eed_0001);
    let mut items = Vec::with_capacity(200);
    for i in 0..200usize {
        let premium = i % 2 == 1;
        let jitter = (rng.next_u64() % 10) as usize;
        let k = i / 2 + jitter;
        let (text, gold_category) = match (premium, i % 6) {
            (false, 0 | 3) => (math_efficient(k), TaskCategory::Math),
            (false, 1 | 4) => (coding_efficient(k), TaskCategory::Coding),
            (false, _) => (summarization_efficient(k), TaskCategory::SummarizationWriting),
            (true, 0 | 3) => (math_premium(k), TaskCategory::Math),
            (true, 1 | 4) => (coding_premium(k), TaskCategory::Coding),
            (true, _) => (summarization_premium(k), TaskCategory::SummarizationWriting),
        };
        items.push(ValidationItem {
            text,
            gold_category,
            gold_tier: if premium { CostTier::Premium } else { CostTier::Efficient },
        });
    }
    items
}
