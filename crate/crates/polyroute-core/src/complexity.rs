//! Text complexity features and the escalation threshold.
//!
//! Three features are computed per query: intent alignment against
//! weighted keyword dictionaries, linguistic complexity (length, clause
//! nesting, token entropy), and structural complexity (code, SQL, math
//! notation, structured data). Their weighted combination is the scalar
//! complexity score compared against the threshold `tau` to decide
//! efficient-versus-premium escalation; `tau` itself is calibrated by a
//! grid sweep against a validation set under a cost budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::BackendPool;
use crate::model::{tokenize, CostTier, TaskCategory};
use crate::{Error, Result};

/// Coefficients of the scalar complexity score. Must be l1-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ComplexityWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidConfig("complexity weights must be non-negative".into()));
        }
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "complexity weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

impl Default for ComplexityWeights {
    fn default() -> Self {
        Self { alpha: 0.40, beta: 0.25, gamma: 0.35 }
    }
}

/// One weighted keyword or phrase. Weights range 1..=5.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub keyword: String,
    pub weight: u8,
}

/// Per-category keyword dictionaries with weights 1-5.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordDictionary {
    pub categories: BTreeMap<TaskCategory, Vec<KeywordEntry>>,
}

impl KeywordDictionary {
    pub fn validate(&self) -> Result<()> {
        for (category, entries) in &self.categories {
            for e in entries {
                if e.weight < 1 || e.weight > 5 {
                    return Err(Error::InvalidConfig(format!(
                        "keyword `{}` in {category} has weight {}, must be 1-5",
                        e.keyword, e.weight
                    )));
                }
                if e.keyword != e.keyword.to_lowercase() {
                    return Err(Error::InvalidConfig(format!(
                        "keyword `{}` in {category} must be lowercase",
                        e.keyword
                    )));
                }
            }
        }
        Ok(())
    }

    /// Matched weight sum per category. A keyword matches when its token
    /// sequence appears contiguously in the text's token stream; each
    /// dictionary entry counts at most once.
    pub fn category_scores(&self, text: &str) -> BTreeMap<TaskCategory, u32> {
        let tokens = tokenize(text);
        let mut scores = BTreeMap::new();
        for (category, entries) in &self.categories {
            let mut sum = 0u32;
            for e in entries {
                let needle = tokenize(&e.keyword);
                if !needle.is_empty() && contains_subsequence(&tokens, &needle) {
                    sum += u32::from(e.weight);
                }
            }
            if sum > 0 {
                scores.insert(*category, sum);
            }
        }
        scores
    }

    /// Best-scoring category and its matched weight sum.
    pub fn best_category(&self, text: &str) -> Option<(TaskCategory, u32)> {
        self.category_scores(text)
            .into_iter()
            .max_by_key(|(category, sum)| (*sum, std::cmp::Reverse(category.index())))
    }

    pub fn bundled() -> Self {
        let mut categories = BTreeMap::new();
        let entry = |keyword: &str, weight: u8| KeywordEntry { keyword: keyword.into(), weight };
        categories.insert(
            TaskCategory::Math,
            vec![
                entry("solve", 4),
                entry("solve for", 5),
                entry("integral", 5),
                entry("derivative", 5),
                entry("equation", 4),
                entry("theorem", 4),
                entry("algebra", 4),
                entry("geometry", 4),
                entry("probability", 4),
                entry("remainder", 3),
                entry("compute", 3),
                entry("calculate", 3),
                entry("matrix", 3),
                entry("prove", 3),
            ],
        );
        categories.insert(
            TaskCategory::Coding,
            vec![
                entry("generate code", 5),
                entry("write a function", 5),
                entry("write a program", 5),
                entry("debug", 4),
                entry("refactor", 4),
                entry("python", 4),
                entry("unit test", 4),
                entry("stack trace", 4),
                entry("implement", 3),
                entry("compile", 3),
                entry("code", 3),
                entry("script", 3),
                entry("regex", 3),
            ],
        );
        categories.insert(
            TaskCategory::SummarizationWriting,
            vec![
                entry("summarize", 5),
                entry("write an essay", 5),
                entry("summary", 4),
                entry("rewrite", 4),
                entry("rephrase", 4),
                entry("proofread", 4),
                entry("translate", 4),
                entry("paraphrase", 4),
                entry("cover letter", 4),
                entry("condense", 4),
                entry("draft", 3),
                entry("shorten", 3),
            ],
        );
        categories.insert(
            TaskCategory::Vision,
            vec![
                entry("in this image", 4),
                entry("in this photo", 4),
                entry("in the picture", 4),
                entry("what is shown", 4),
                entry("photo", 3),
                entry("picture", 3),
                entry("describe", 2),
                entry("image", 2),
            ],
        );
        categories.insert(
            TaskCategory::Document,
            vec![
                entry("in the document", 4),
                entry("spreadsheet", 4),
                entry("invoice", 4),
                entry("contract", 3),
                entry("pdf", 3),
                entry("the report", 3),
                entry("the table", 3),
                entry("clause", 3),
                entry("form", 2),
            ],
        );
        categories.insert(
            TaskCategory::ImageGen,
            vec![
                entry("generate an image", 5),
                entry("draw a picture", 5),
                entry("create an illustration", 5),
                entry("render an image", 5),
                entry("design a logo", 5),
                entry("draw", 3),
                entry("illustration", 3),
                entry("sketch", 3),
            ],
        );
        categories.insert(
            TaskCategory::Audio,
            vec![
                entry("transcribe", 5),
                entry("this audio", 4),
                entry("the recording", 4),
                entry("transcript", 4),
                entry("speaker said", 4),
                entry("speech", 3),
                entry("podcast", 3),
            ],
        );
        categories.insert(
            TaskCategory::Video,
            vec![
                entry("this video", 4),
                entry("the clip", 4),
                entry("footage", 4),
                entry("key frames", 4),
                entry("video", 3),
            ],
        );
        categories.insert(TaskCategory::TextMoe, Vec::new());
        categories.insert(
            TaskCategory::ObjectDetect,
            vec![
                entry("detect", 5),
                entry("bounding box", 5),
                entry("count the", 4),
                entry("find all", 4),
                entry("label the", 4),
                entry("objects", 4),
                entry("how many", 3),
                entry("identify", 3),
            ],
        );
        categories.insert(TaskCategory::Complex, Vec::new());
        categories.insert(TaskCategory::Ambiguous, Vec::new());
        categories.insert(
            TaskCategory::General,
            vec![
                entry("what is", 3),
                entry("who was", 3),
                entry("why does", 3),
                entry("tell me about", 4),
                entry("define", 4),
                entry("explain", 3),
                entry("history of", 3),
                entry("difference between", 3),
                entry("capital of", 3),
            ],
        );
        Self { categories }
    }
}

fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Structural signals detected in text, reused by the intent engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralSignal {
    CodeBlock,
    Sql,
    MathNotation,
    StructuredData,
}

/// Tunable constants of the complexity analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityParams {
    pub weights: ComplexityWeights,
    /// Saturation constant for intent alignment: I = s / (s + k_sat).
    pub k_sat: f64,
    /// Class boundary low/medium on the score axis.
    pub cut_low: f64,
    /// Class boundary medium/high on the score axis.
    pub cut_high: f64,
    /// Logistic sharpness of the class distribution map.
    pub sharpness: f64,
    /// Default escalation threshold before calibration.
    pub tau: f64,
    /// Contribution of each fired structural signal, capped at 1 overall.
    pub signal_weights: BTreeMap<StructuralSignal, f64>,
}

impl Default for ComplexityParams {
    fn default() -> Self {
        let mut signal_weights = BTreeMap::new();
        signal_weights.insert(StructuralSignal::CodeBlock, 0.5);
        signal_weights.insert(StructuralSignal::Sql, 0.5);
        signal_weights.insert(StructuralSignal::MathNotation, 0.4);
        signal_weights.insert(StructuralSignal::StructuredData, 0.3);
        Self {
            weights: ComplexityWeights::default(),
            k_sat: 8.0,
            cut_low: 0.35,
            cut_high: 0.65,
            sharpness: 10.0,
            tau: 0.55,
            signal_weights,
        }
    }
}

/// Class probabilities over {low, medium, high}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl ClassDistribution {
    pub fn sum(&self) -> f64 {
        self.low + self.medium + self.high
    }
}

/// Complexity features, scalar score, and class distribution of a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub intent_align: f64,
    pub linguistic: f64,
    pub structural: f64,
    pub score: f64,
    pub class_dist: ClassDistribution,
    pub signals: Vec<StructuralSignal>,
}

/// Intent alignment: best-category matched keyword weight s mapped to
/// s / (s + k_sat), which lands in [0, 1) and grows with matched weight.
pub fn intent_alignment(text: &str, dicts: &KeywordDictionary, k_sat: f64) -> f64 {
    let best = dicts.best_category(text).map(|(_, s)| f64::from(s)).unwrap_or(0.0);
    if best == 0.0 {
        return 0.0;
    }
    best / (best + k_sat)
}

/// The three normalized linguistic components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinguisticComponents {
    /// tokens / (tokens + 64)
    pub length: f64,
    /// clause/nesting punctuation count p mapped to p / (p + 8)
    pub nesting: f64,
    /// Shannon entropy of the token distribution over log2(distinct)
    pub entropy: f64,
}

pub fn linguistic_components(text: &str) -> LinguisticComponents {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return LinguisticComponents { length: 0.0, nesting: 0.0, entropy: 0.0 };
    }
    let n = tokens.len() as f64;
    let length = n / (n + 64.0);

    let punct = text.chars().filter(|c| matches!(c, ',' | ';' | ':' | '(' | ')' | '[' | ']' | '{' | '}')).count() as f64;
    let nesting = punct / (punct + 8.0);

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let distinct = counts.len() as f64;
    let entropy = if counts.len() <= 1 {
        0.0
    } else {
        let h: f64 = counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum();
        h / distinct.log2()
    };

    LinguisticComponents { length, nesting, entropy }
}

/// Mean of the three linguistic components; 0 for empty text.
pub fn linguistic_complexity(text: &str) -> f64 {
    let c = linguistic_components(text);
    (c.length + c.nesting + c.entropy) / 3.0
}

/// Structural signal detection over the declared heuristic subset: fenced
/// or indented code, SQL keyword skeletons, math notation, and balanced
/// key-value structured data. Returns the capped weighted sum and the
/// fired signal set for reuse by the intent engine.
pub fn structural_complexity(
    text: &str,
    params: &ComplexityParams,
) -> (f64, Vec<StructuralSignal>) {
    let mut signals = Vec::new();
    if detect_code_block(text) {
        signals.push(StructuralSignal::CodeBlock);
    }
    if detect_sql(text) {
        signals.push(StructuralSignal::Sql);
    }
    if detect_math_notation(text) {
        signals.push(StructuralSignal::MathNotation);
    }
    if detect_structured_data(text) {
        signals.push(StructuralSignal::StructuredData);
    }
    let score: f64 = signals
        .iter()
        .map(|s| params.signal_weights.get(s).copied().unwrap_or(0.0))
        .sum();
    (score.min(1.0), signals)
}

fn code_symbol_count(s: &str) -> usize {
    s.chars().filter(|c| matches!(c, '{' | '}' | '(' | ')' | ';' | '=' | '<' | '>')).count()
}

fn detect_code_block(text: &str) -> bool {
    if text.contains("```") {
        return true;
    }
    // Indented line with enough code punctuation.
    for line in text.lines() {
        let indented = line.starts_with("    ") || line.starts_with('\t');
        if indented && code_symbol_count(line) >= 2 {
            return true;
        }
    }
    // Inline code cues plus symbol density.
    let cues = ["def ", "fn ", "return ", "import ", "print(", "function(", "lambda "];
    cues.iter().any(|c| text.contains(c)) && code_symbol_count(text) >= 3
}

fn detect_sql(text: &str) -> bool {
    let tokens = tokenize(text);
    let follows = |first: &str, second: &str| {
        tokens
            .iter()
            .position(|t| t == first)
            .map(|i| tokens[i + 1..].iter().any(|t| t == second))
            .unwrap_or(false)
    };
    follows("select", "from")
        || follows("insert", "into")
        || follows("update", "set")
        || follows("create", "table")
        || follows("delete", "from")
}

fn detect_math_notation(text: &str) -> bool {
    if ["\\int", "\\frac", "\\sum", "\\sqrt", "∫", "∑", "√"].iter().any(|t| text.contains(t)) {
        return true;
    }
    // Caret exponent between alphanumerics, e.g. x^2.
    let bytes: Vec<char> = text.chars().collect();
    for (i, &c) in bytes.iter().enumerate() {
        if c == '^'
            && i > 0
            && i + 1 < bytes.len()
            && bytes[i - 1].is_alphanumeric()
            && bytes[i + 1].is_alphanumeric()
        {
            return true;
        }
    }
    // Operator density with at least one digit.
    let ops = text.chars().filter(|c| matches!(c, '+' | '*' | '/' | '=')).count();
    ops >= 2 && text.chars().any(|c| c.is_ascii_digit())
}

fn detect_structured_data(text: &str) -> bool {
    let opens = text.chars().filter(|&c| c == '{' || c == '[').count();
    let closes = text.chars().filter(|&c| c == '}' || c == ']').count();
    if opens == 0 || opens != closes {
        return false;
    }
    let kv_markers = text.matches("\":").count() + text.matches("\" :").count();
    let eq_pairs = text.matches('=').count();
    kv_markers >= 2 || eq_pairs >= 2
}

/// The scalar score: alpha * I + beta * L + gamma * S, exactly.
pub fn score_from_features(i: f64, l: f64, s: f64, weights: &ComplexityWeights) -> f64 {
    weights.alpha * i + weights.beta * l + weights.gamma * s
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fixed logistic map from the scalar score to class probabilities, with
/// cut points at the low/medium and medium/high boundaries. P(high) is
/// strictly increasing in the score.
pub fn class_distribution(score: f64, params: &ComplexityParams) -> ClassDistribution {
    let g1 = sigmoid(params.sharpness * (score - params.cut_low));
    let g2 = sigmoid(params.sharpness * (score - params.cut_high));
    ClassDistribution { low: 1.0 - g1, medium: g1 - g2, high: g2 }
}

/// Full complexity profile of a text query.
pub fn complexity(
    text: &str,
    dicts: &KeywordDictionary,
    params: &ComplexityParams,
) -> Result<ComplexityProfile> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let intent_align = intent_alignment(text, dicts, params.k_sat);
    let linguistic = linguistic_complexity(text);
    let (structural, signals) = structural_complexity(text, params);
    let score = score_from_features(intent_align, linguistic, structural, &params.weights);
    let class_dist = class_distribution(score, params);
    Ok(ComplexityProfile { intent_align, linguistic, structural, score, class_dist, signals })
}

/// A labeled validation item for threshold calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationItem {
    pub text: String,
    pub gold_category: TaskCategory,
    pub gold_tier: CostTier,
}

/// Calibrated escalation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau: f64,
    pub calibrated_at: u64,
    /// Total simulated routing cost at the chosen tau.
    pub budget_used: f64,
    /// Tier accuracy at the chosen tau.
    pub accuracy: f64,
    /// Set when no grid point met the budget; tau falls back to 1.0.
    pub budget_infeasible: bool,
}

/// One grid point of the tau sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub accuracy: f64,
    pub cost: f64,
}

/// Sweeps tau over {0.00, 0.01, ..., 1.00}: each item whose score falls
/// below tau is routed efficient, otherwise premium; accuracy is measured
/// against gold tiers and cost charges each item the cheapest backend of
/// its decided tier. See [`calibrate_tau`] for the selection rule.
pub fn sweep_tau(
    validation: &[ValidationItem],
    dicts: &KeywordDictionary,
    params: &ComplexityParams,
    pool: &BackendPool,
) -> Vec<SweepPoint> {
    let efficient_cost = pool.min_tier_cost(crate::backend::BackendTier::OpenSource);
    let premium_cost = pool.min_tier_cost(crate::backend::BackendTier::Premium);
    let scores: Vec<f64> = validation
        .iter()
        .map(|item| {
            complexity(&item.text, dicts, params).map(|p| p.score).unwrap_or(0.0)
        })
        .collect();

    (0..=100)
        .map(|step| {
            let tau = f64::from(step) / 100.0;
            let mut correct = 0usize;
            let mut cost = 0.0;
            for (item, &score) in validation.iter().zip(&scores) {
                let decided =
                    if score < tau { CostTier::Efficient } else { CostTier::Premium };
                if decided == item.gold_tier {
                    correct += 1;
                }
                cost += match decided {
                    CostTier::Efficient => efficient_cost,
                    CostTier::Premium => premium_cost,
                };
            }
            SweepPoint { tau, accuracy: correct as f64 / validation.len() as f64, cost }
        })
        .collect()
}

/// Picks the accuracy-maximizing tau among grid points whose cost fits
/// the budget; ties break toward the larger (cheaper) tau. When no point
/// is feasible the threshold falls back to tau = 1.0 (never escalate)
/// with the infeasibility flag set.
pub fn calibrate_tau(
    validation: &[ValidationItem],
    budget: f64,
    dicts: &KeywordDictionary,
    params: &ComplexityParams,
    pool: &BackendPool,
    now: u64,
) -> Threshold {
    let points = sweep_tau(validation, dicts, params, pool);
    let feasible: Vec<&SweepPoint> = points.iter().filter(|p| p.cost <= budget).collect();
    if feasible.is_empty() {
        let last = points.last().expect("grid non-empty");
        return Threshold {
            tau: 1.0,
            calibrated_at: now,
            budget_used: last.cost,
            accuracy: last.accuracy,
            budget_infeasible: true,
        };
    }
    let best = feasible
        .into_iter()
        .max_by(|a, b| {
            a.accuracy
                .partial_cmp(&b.accuracy)
                .unwrap()
                .then(a.tau.partial_cmp(&b.tau).unwrap())
        })
        .expect("feasible non-empty");
    Threshold {
        tau: best.tau,
        calibrated_at: now,
        budget_used: best.cost,
        accuracy: best.accuracy,
        budget_infeasible: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendPool, PoolConfig};
    use proptest::prelude::*;

    fn tiny_dict() -> KeywordDictionary {
        let mut categories = BTreeMap::new();
        categories.insert(
            TaskCategory::Math,
            vec![
                KeywordEntry { keyword: "solve".into(), weight: 5 },
                KeywordEntry { keyword: "equation".into(), weight: 3 },
            ],
        );
        KeywordDictionary { categories }
    }

    #[test]
    fn no_dictionary_hits_scores_zero() {
        assert_eq!(intent_alignment("hello", &tiny_dict(), 8.0), 0.0);
    }

    #[test]
    fn matched_weights_saturate_at_half_for_ksat_equal_sum() {
        // weights {5, 3} matched, K_sat = 8 -> 8 / (8 + 8) = 0.5
        let i = intent_alignment("solve the equation", &tiny_dict(), 8.0);
        assert!((i - 0.5).abs() < 1e-12);
    }

    #[test]
    fn adding_a_matched_keyword_never_decreases_alignment() {
        let dicts = KeywordDictionary::bundled();
        let base = intent_alignment("solve this", &dicts, 8.0);
        let more = intent_alignment("solve this equation", &dicts, 8.0);
        assert!(more >= base);
    }

    #[test]
    fn empty_text_has_zero_linguistic_complexity() {
        assert_eq!(linguistic_complexity(""), 0.0);
    }

    #[test]
    fn single_distinct_token_has_zero_entropy() {
        let c = linguistic_components("a a a a");
        assert_eq!(c.entropy, 0.0);
    }

    #[test]
    fn uniform_tokens_have_unit_entropy() {
        // Four distinct tokens, one each: H = 2 bits, log2(4) = 2.
        let c = linguistic_components("w x y z");
        assert!((c.entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_prose_fires_no_structural_signals() {
        let params = ComplexityParams::default();
        let (s, signals) = structural_complexity("the cat sat on the mat", &params);
        assert_eq!(s, 0.0);
        assert!(signals.is_empty());
    }

    #[test]
    fn fenced_code_fires_code_block() {
        let params = ComplexityParams::default();
        let (_, signals) = structural_complexity("```def f(x): return x```", &params);
        assert!(signals.contains(&StructuralSignal::CodeBlock));
    }

    #[test]
    fn sql_skeleton_fires_sql() {
        let params = ComplexityParams::default();
        let (_, signals) =
            structural_complexity("SELECT name FROM users WHERE id = 3", &params);
        assert!(signals.contains(&StructuralSignal::Sql));
    }

    #[test]
    fn math_notation_fires_on_caret_exponent() {
        let params = ComplexityParams::default();
        let (_, signals) = structural_complexity("integrate x^2 dx", &params);
        assert!(signals.contains(&StructuralSignal::MathNotation));
    }

    #[test]
    fn structured_data_fires_on_balanced_kv() {
        let params = ComplexityParams::default();
        let (_, signals) = structural_complexity(
            "parse {\"name\": \"a\", \"size\": 3} into fields",
            &params,
        );
        assert!(signals.contains(&StructuralSignal::StructuredData));
    }

    #[test]
    fn zero_features_give_zero_score_and_low_class() {
        let params = ComplexityParams::default();
        let score = score_from_features(0.0, 0.0, 0.0, &params.weights);
        assert_eq!(score, 0.0);
        let d = class_distribution(score, &params);
        assert!(d.low > d.medium && d.low > d.high);
        assert!((d.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equal_weights_give_convex_combination() {
        let w = ComplexityWeights { alpha: 1.0 / 3.0, beta: 1.0 / 3.0, gamma: 1.0 / 3.0 };
        let score = score_from_features(0.6, 0.6, 0.6, &w);
        assert!((score - 0.6).abs() < 1e-12);
    }

    #[test]
    fn score_is_linear_in_each_feature() {
        let w = ComplexityWeights::default();
        let base = score_from_features(0.3, 0.4, 0.5, &w);
        let delta = 0.17;
        let bumped = score_from_features(0.3 + delta, 0.4, 0.5, &w);
        assert!((bumped - base - w.alpha * delta).abs() < 1e-12);
        let bumped = score_from_features(0.3, 0.4 + delta, 0.5, &w);
        assert!((bumped - base - w.beta * delta).abs() < 1e-12);
        let bumped = score_from_features(0.3, 0.4, 0.5 + delta, &w);
        assert!((bumped - base - w.gamma * delta).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_an_error() {
        let dicts = KeywordDictionary::bundled();
        let params = ComplexityParams::default();
        assert!(matches!(complexity("", &dicts, &params), Err(Error::EmptyText)));
    }

    fn two_tier_pool() -> BackendPool {
        BackendPool::new(PoolConfig::bundled()).unwrap()
    }

    fn item(text: &str, gold_tier: CostTier) -> ValidationItem {
        ValidationItem { text: text.into(), gold_category: TaskCategory::General, gold_tier }
    }

    #[test]
    fn zero_budget_forces_tau_one_with_warning() {
        let dicts = KeywordDictionary::bundled();
        let params = ComplexityParams::default();
        let pool = two_tier_pool();
        let validation = vec![item("hello there", CostTier::Efficient)];
        let t = calibrate_tau(&validation, 0.0, &dicts, &params, &pool, 7);
        assert_eq!(t.tau, 1.0);
        assert!(t.budget_infeasible);
        assert_eq!(t.calibrated_at, 7);
    }

    #[test]
    fn all_premium_golds_pick_largest_maximizing_tau() {
        let dicts = KeywordDictionary::bundled();
        let params = ComplexityParams::default();
        let pool = two_tier_pool();
        let texts = [
            "solve the integral of x^2 over the interval, compute the derivative, prove the theorem holds",
            "solve this equation: 3*x + 4 = 19, calculate the remainder",
            "debug the python code ```def f(x): return x*2``` and refactor it",
            "summarize the findings. rewrite and paraphrase the abstract, proofread the draft",
            "SELECT total FROM ledger WHERE year = 2024, then explain the schema design tradeoffs",
            "compute probability of two dice summing to 7, calculate 3^4 / 2",
            "write a function in python to parse {\"a\": 1, \"b\": 2} and implement unit test coverage",
            "prove the theorem, derive the equation 2*y = x^3, solve for y",
            "translate this essay and condense the summary into one paragraph, rephrase the ending",
            "implement the algorithm, compile the script, debug the stack trace ```fn main() {}```",
        ];
        let validation: Vec<ValidationItem> =
            texts.iter().map(|t| item(t, CostTier::Premium)).collect();

        // Independent grid oracle: largest grid tau not exceeding any score.
        let min_score = validation
            .iter()
            .map(|v| complexity(&v.text, &dicts, &params).unwrap().score)
            .fold(f64::INFINITY, f64::min);
        assert!(min_score > 0.0, "fixture must have nonzero scores");
        let expected = (min_score * 100.0).floor() / 100.0;

        let t = calibrate_tau(&validation, f64::INFINITY, &dicts, &params, &pool, 0);
        assert!((t.accuracy - 1.0).abs() < 1e-12);
        assert!((t.tau - expected).abs() < 1e-9);
        assert!(!t.budget_infeasible);
        // tau = 0 is among the maximizers, but the tie-break picks larger.
        assert!(t.tau >= 0.0);
    }

    #[test]
    fn bigger_budget_never_hurts_accuracy() {
        let dicts = KeywordDictionary::bundled();
        let params = ComplexityParams::default();
        let pool = two_tier_pool();
        let validation = vec![
            item("hi", CostTier::Efficient),
            item("solve the integral of x^2 and prove the theorem, compute each derivative", CostTier::Premium),
            item("nice weather we are having", CostTier::Efficient),
            item("debug ```def g(): return 1``` and refactor the python code, implement unit test", CostTier::Premium),
        ];
        let mut last_acc = -1.0;
        for budget in [0.0, 0.2, 0.5, 1.0, 2.0, 10.0] {
            let t = calibrate_tau(&validation, budget, &dicts, &params, &pool, 0);
            assert!(t.accuracy >= last_acc);
            last_acc = t.accuracy;
        }
    }

    proptest! {
        #[test]
        fn features_stay_in_unit_interval(text in ".{0,300}") {
            let dicts = KeywordDictionary::bundled();
            let params = ComplexityParams::default();
            let i = intent_alignment(&text, &dicts, params.k_sat);
            let l = linguistic_complexity(&text);
            let (s, _) = structural_complexity(&text, &params);
            prop_assert!((0.0..=1.0).contains(&i));
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn higher_score_means_higher_p_high(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let params = ComplexityParams::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-12);
            let d_lo = class_distribution(lo, &params);
            let d_hi = class_distribution(hi, &params);
            prop_assert!(d_hi.high > d_lo.high);
            prop_assert!((d_lo.sum() - 1.0).abs() < 1e-9);
            prop_assert!((d_hi.sum() - 1.0).abs() < 1e-9);
        }
    }
}
