//! Evaluation harness: runs a labeled corpus through the engine, scores
//! routing and classification, accounts cost and latency against an
//! always-premium replay, and emits similarity metrics and sweeps.
//!
//! Two passes per evaluation: the always-premium replay (every query
//! forced onto the flagship route) produces the reference answers and the
//! cost/latency baseline; the routed pass produces everything else. Both
//! passes run the same classification on the same fresh state, so paired
//! answers differ only where routing actually changed the outcome.
//! Reports are byte-identical for a fixed (corpus, config, seed).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::BackendTier;
use crate::config::EngineConfig;
use crate::corpus::Corpus;
use crate::engine::{Engine, EngineResponse};
use crate::model::{cosine, embed_text, tokenize, ExecutionCategory, Modality, TaskCategory};
use crate::planner::{Route, RouteKind, RoutingWeights};
use crate::{Error, Result};

/// Per-category precision/recall/F1 with support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: TaskCategory,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// The full evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub seed: u64,
    pub coarse_accuracy: f64,
    pub fine_accuracy: f64,
    pub per_category: Vec<CategoryMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub attachment_precision: f64,
    pub attachment_recall: f64,
    pub followup_accuracy: f64,
    pub kappa: f64,
    pub tier_query_share: BTreeMap<BackendTier, f64>,
    pub tier_cost_share: BTreeMap<BackendTier, f64>,
    /// Cost share of the backends referenced by premium-kind routes.
    pub premium_llm_cost_share: f64,
    pub routed_total_cost: f64,
    pub replay_total_cost: f64,
    /// Routed total cost over the always-premium replay total.
    pub cost_ratio_vs_replay: f64,
    /// Premium-tier cost share of the replay ledger (100 by construction).
    pub replay_premium_cost_share: f64,
    pub mean_latency_by_modality: BTreeMap<Modality, f64>,
    pub routed_mean_latency_ms: f64,
    pub replay_mean_latency_ms: f64,
    pub throughput_qps: f64,
    pub replay_throughput_qps: f64,
    pub mean_tfidf_cosine: f64,
    pub mean_embedding_cosine: f64,
    /// Fraction of pairs with embedding cosine above 0.8.
    pub high_similarity_fraction: f64,
}

/// Coarse route classes for the tier-plus-pipeline accuracy metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RouteClass {
    Text,
    Image,
    ImageGen,
    Audio,
    Video,
    Document,
}

fn expected_class(category: TaskCategory) -> RouteClass {
    match category {
        TaskCategory::Vision | TaskCategory::ObjectDetect => RouteClass::Image,
        TaskCategory::ImageGen => RouteClass::ImageGen,
        TaskCategory::Audio => RouteClass::Audio,
        TaskCategory::Video => RouteClass::Video,
        TaskCategory::Document => RouteClass::Document,
        _ => RouteClass::Text,
    }
}

fn decision_class(route: &Route) -> RouteClass {
    match route.kind {
        RouteKind::Efficient | RouteKind::Premium | RouteKind::AgentCascade => RouteClass::Text,
        RouteKind::Couplet => RouteClass::Image,
        RouteKind::ModalityPipeline(modality) => match modality {
            // An image pipeline that consumes text but not images is the
            // generation path, not the vision path.
            Modality::Image if !route.supports(Modality::Image) => RouteClass::ImageGen,
            Modality::Image => RouteClass::Image,
            Modality::Audio => RouteClass::Audio,
            Modality::Video => RouteClass::Video,
            Modality::Document => RouteClass::Document,
            _ => RouteClass::Text,
        },
    }
}

/// Modality a fixture name implies, for attachment-detection scoring.
fn fixture_modality(name: &str) -> Option<Modality> {
    let prefix = name.split('_').next().unwrap_or("");
    match prefix {
        "img" | "shot" | "det" => Some(Modality::Image),
        "report" | "table" | "notes" => Some(Modality::Document),
        "voice" | "song" => Some(Modality::Audio),
        "clip" | "scene" => Some(Modality::Video),
        _ => None,
    }
}

/// Cohen's kappa over the 13 task categories.
pub fn cohens_kappa(a: &[TaskCategory], b: &[TaskCategory]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut expected = 0.0;
    for category in TaskCategory::ALL {
        let pa = a.iter().filter(|c| **c == category).count() as f64 / n;
        let pb = b.iter().filter(|c| **c == category).count() as f64 / n;
        expected += pa * pb;
    }
    if (1.0 - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Confusion-matrix derived classification metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub per_category: Vec<CategoryMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Accuracy and macro precision/recall/F1 from (gold, predicted) pairs.
/// Categories with no predictions score zero precision; macro averages
/// run over the categories that appear in the gold labels.
pub fn classification_metrics(
    gold: &[TaskCategory],
    predicted: &[TaskCategory],
) -> Result<ClassificationMetrics> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch(gold.len(), predicted.len()));
    }
    let n = gold.len();
    let mut confusion = [[0usize; 13]; 13];
    for (g, p) in gold.iter().zip(predicted) {
        confusion[g.index()][p.index()] += 1;
    }
    let accuracy = gold.iter().zip(predicted).filter(|(g, p)| g == p).count() as f64
        / n.max(1) as f64;

    let mut per_category = Vec::new();
    for category in TaskCategory::ALL {
        let i = category.index();
        let support: usize = confusion[i].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = confusion[i][i];
        let predicted_count: usize = (0..13).map(|g| confusion[g][i]).sum();
        let precision = if predicted_count == 0 { 0.0 } else { tp as f64 / predicted_count as f64 };
        let recall = tp as f64 / support as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_category.push(CategoryMetrics { category, precision, recall, f1, support });
    }
    let k = per_category.len().max(1) as f64;
    Ok(ClassificationMetrics {
        accuracy,
        macro_precision: per_category.iter().map(|m| m.precision).sum::<f64>() / k,
        macro_recall: per_category.iter().map(|m| m.recall).sum::<f64>() / k,
        macro_f1: per_category.iter().map(|m| m.f1).sum::<f64>() / k,
        per_category,
    })
}

/// Lexical and semantic similarity of paired response lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub mean_tfidf_cosine: f64,
    pub mean_embedding_cosine: f64,
    pub high_similarity_fraction: f64,
}

/// TF-IDF (raw counts, smoothed idf ln((1+N)/(1+df)) + 1, vocabulary over
/// the union of both lists) plus feature-hashed embedding cosine; the
/// fraction counts embedding cosines strictly above 0.8.
pub fn similarity_report(responses: &[String], references: &[String]) -> Result<SimilarityReport> {
    if responses.len() != references.len() {
        return Err(Error::LengthMismatch(responses.len(), references.len()));
    }
    if responses.is_empty() {
        return Ok(SimilarityReport {
            mean_tfidf_cosine: 0.0,
            mean_embedding_cosine: 0.0,
            high_similarity_fraction: 0.0,
        });
    }
    let all_docs: Vec<Vec<String>> = responses
        .iter()
        .chain(references.iter())
        .map(|d| tokenize(d))
        .collect();
    let n_docs = all_docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &all_docs {
        let mut seen: Vec<&str> = Vec::new();
        for token in doc {
            if !seen.contains(&token.as_str()) {
                seen.push(token);
                *df.entry(token).or_insert(0) += 1;
            }
        }
    }
    let idf: BTreeMap<&str, f64> = df
        .iter()
        .map(|(t, d)| (*t, ((1.0 + n_docs) / (1.0 + *d as f64)).ln() + 1.0))
        .collect();
    let vectorize = |tokens: &[String]| -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        tf.into_iter().map(|(t, count)| { let w = count * idf[t.as_str()]; (t, w) }).collect()
    };
    let sparse_cosine = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| -> f64 {
        let dot: f64 = a
            .iter()
            .filter_map(|(t, w)| b.get(t).map(|v| w * v))
            .sum();
        let na: f64 = a.values().map(|w| w * w).sum::<f64>().sqrt();
        let nb: f64 = b.values().map(|w| w * w).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };

    let half = responses.len();
    let mut tfidf_sum = 0.0;
    let mut embed_sum = 0.0;
    let mut high = 0usize;
    for i in 0..half {
        let va = vectorize(&all_docs[i]);
        let vb = vectorize(&all_docs[half + i]);
        tfidf_sum += sparse_cosine(&va, &vb);
        let ec = cosine(&embed_text(&responses[i]), &embed_text(&references[i]));
        embed_sum += ec;
        if ec > 0.8 {
            high += 1;
        }
    }
    Ok(SimilarityReport {
        mean_tfidf_cosine: tfidf_sum / half as f64,
        mean_embedding_cosine: embed_sum / half as f64,
        high_similarity_fraction: high as f64 / half as f64,
    })
}

/// One grid point of a cost/accuracy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub tau: f64,
    pub lambda_c: f64,
    pub cost: f64,
    pub accuracy: f64,
    pub pareto_optimal: bool,
}

/// Marks rows not dominated by any other row (lower-or-equal cost and
/// higher-or-equal accuracy with at least one strict).
pub fn mark_pareto(rows: &mut [ParetoRow]) {
    let snapshot: Vec<(f64, f64)> = rows.iter().map(|r| (r.cost, r.accuracy)).collect();
    for (i, row) in rows.iter_mut().enumerate() {
        row.pareto_optimal = !snapshot.iter().enumerate().any(|(j, (cost, accuracy))| {
            j != i
                && *cost <= row.cost
                && *accuracy >= row.accuracy
                && (*cost < row.cost || *accuracy > row.accuracy)
        });
    }
}

/// Rescales routing weights to a new cost penalty, preserving the
/// relative priority of the other three coefficients.
pub fn with_lambda(w: &RoutingWeights, lambda_c: f64) -> RoutingWeights {
    let rest = w.delta_m + w.delta_u + w.delta_t;
    let scale = (1.0 - lambda_c) / rest;
    RoutingWeights {
        delta_m: w.delta_m * scale,
        delta_u: w.delta_u * scale,
        delta_t: w.delta_t * scale,
        lambda_c,
    }
}

/// Evaluates every (tau, lambda) grid point on the corpus; each row is
/// a routed-only evaluation. Deterministic for a fixed seed.
pub fn pareto_sweep(
    corpus: &Corpus,
    config: &EngineConfig,
    taus: &[f64],
    lambdas: &[f64],
    seed: u64,
) -> Result<Vec<ParetoRow>> {
    let mut rows = Vec::with_capacity(taus.len() * lambdas.len());
    for &tau in taus {
        for &lambda_c in lambdas {
            let mut grid_config = config.clone();
            grid_config.complexity.tau = tau;
            grid_config.routing = with_lambda(&config.routing, lambda_c);
            let report = evaluate_with_options(corpus, &grid_config, seed, false)?;
            rows.push(ParetoRow {
                tau,
                lambda_c,
                cost: report.routed_total_cost,
                accuracy: report.coarse_accuracy,
                pareto_optimal: false,
            });
        }
    }
    mark_pareto(&mut rows);
    Ok(rows)
}

/// Full two-pass evaluation.
pub fn evaluate(corpus: &Corpus, config: &EngineConfig, seed: u64) -> Result<EvalReport> {
    evaluate_with_options(corpus, config, seed, true)
}

/// Evaluation with an optional always-premium replay pass; without it the
/// replay and similarity fields stay zero (used by sweeps).
pub fn evaluate_with_options(
    corpus: &Corpus,
    config: &EngineConfig,
    seed: u64,
    include_replay: bool,
) -> Result<EvalReport> {
    let mut routed_config = config.clone();
    routed_config.run_seed = seed;
    let engine = Engine::new(routed_config.clone(), corpus.annotations.clone())?;
    let replay_engine = if include_replay {
        Some(Engine::new(routed_config, corpus.annotations.clone())?)
    } else {
        None
    };

    let n = corpus.records.len();
    let mut gold_labels = Vec::with_capacity(n);
    let mut predicted_labels = Vec::with_capacity(n);
    let mut coarse_correct = 0usize;
    let mut attachment_total = 0usize;
    let mut attachment_correct = 0usize;
    let mut followup_total = 0usize;
    let mut followup_correct = 0usize;
    let mut latency_by_modality: BTreeMap<Modality, (f64, usize)> = BTreeMap::new();
    let mut routed_latency_sum = 0.0;
    let mut replay_latency_sum = 0.0;
    let mut routed_payloads = Vec::with_capacity(n);
    let mut replay_payloads = Vec::with_capacity(n);

    for (index, record) in corpus.records.iter().enumerate() {
        let query = corpus.query_for(record).map_err(|e| Error::CorpusError {
            index,
            reason: e.to_string(),
        })?;
        let routed: EngineResponse =
            engine.handle(&query).map_err(|e| Error::CorpusError {
                index,
                reason: e.to_string(),
            })?;

        gold_labels.push(record.gold_category);
        predicted_labels.push(routed.category);

        let tier_ok = match &routed.decision {
            Some(d) => {
                let decided = if d.chosen.tier == BackendTier::Premium {
                    crate::model::CostTier::Premium
                } else {
                    crate::model::CostTier::Efficient
                };
                decided == record.gold_tier
            }
            None => false,
        };
        let class_ok = routed
            .decision
            .as_ref()
            .map(|d| decision_class(&d.chosen) == expected_class(record.gold_category))
            .unwrap_or(false);
        if tier_ok && class_ok {
            coarse_correct += 1;
        }

        // Attachment detection against fixture-implied modalities.
        let intake = crate::intake::classify_intake(
            &query,
            &crate::intake::FixtureTranscriber,
            &config.intake,
        )
        .map_err(|e| Error::CorpusError { index, reason: e.to_string() })?;
        for detection in &intake.per_attachment {
            if let Some(implied) = fixture_modality(&detection.filename) {
                attachment_total += 1;
                if detection.modality == implied {
                    attachment_correct += 1;
                }
            }
        }

        if let Some(target) = &record.followup_target {
            followup_total += 1;
            let linked = routed.execution_category == ExecutionCategory::FollowUp
                && routed
                    .intent
                    .as_ref()
                    .and_then(|i| i.followup_target.as_deref())
                    .map(|t| t == target)
                    .unwrap_or(false);
            if linked {
                followup_correct += 1;
            }
        }

        let slot = latency_by_modality.entry(record.gold_modality).or_insert((0.0, 0));
        slot.0 += routed.simulated_latency_ms;
        slot.1 += 1;
        routed_latency_sum += routed.simulated_latency_ms;
        routed_payloads.push(routed.payload);

        if let Some(replay) = &replay_engine {
            let reference = replay
                .handle_forced(&query, "flagship-direct")
                .map_err(|e| Error::CorpusError { index, reason: e.to_string() })?;
            replay_latency_sum += reference.simulated_latency_ms;
            replay_payloads.push(reference.payload);
        }
    }

    let classification = classification_metrics(&gold_labels, &predicted_labels)?;
    let annotator_a: Vec<TaskCategory> = corpus.records.iter().map(|r| r.annotator_a).collect();
    let annotator_b: Vec<TaskCategory> = corpus.records.iter().map(|r| r.annotator_b).collect();
    let kappa = cohens_kappa(&annotator_a, &annotator_b)?;

    let ledger = engine.pool().ledger_report();
    let mut tier_query_share = BTreeMap::new();
    let mut tier_cost_share = BTreeMap::new();
    for tier in BackendTier::ALL {
        tier_query_share.insert(tier, ledger.query_share(tier));
        tier_cost_share.insert(tier, ledger.cost_share(tier));
    }
    let premium_llm_backends: Vec<&str> = config
        .routes
        .iter()
        .filter(|r| r.kind == RouteKind::Premium)
        .map(|r| r.backend_id.as_str())
        .collect();
    let premium_llm_cost_share: f64 = premium_llm_backends
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .iter()
        .map(|b| ledger.backend_cost_share(b))
        .sum();

    let (replay_total_cost, replay_premium_cost_share) = match &replay_engine {
        Some(replay) => {
            let replay_ledger = replay.pool().ledger_report();
            (replay_ledger.total_cost, replay_ledger.cost_share(BackendTier::Premium))
        }
        None => (0.0, 0.0),
    };

    let similarity = if include_replay {
        similarity_report(&routed_payloads, &replay_payloads)?
    } else {
        SimilarityReport {
            mean_tfidf_cosine: 0.0,
            mean_embedding_cosine: 0.0,
            high_similarity_fraction: 0.0,
        }
    };

    let width = config.eval.concurrency_width.max(1) as f64;
    let throughput = |total_latency_ms: f64| {
        if total_latency_ms == 0.0 {
            0.0
        } else {
            n as f64 / (total_latency_ms / width / 1000.0)
        }
    };

    Ok(EvalReport {
        records: n,
        seed,
        coarse_accuracy: coarse_correct as f64 / n.max(1) as f64,
        fine_accuracy: classification.accuracy,
        per_category: classification.per_category,
        macro_precision: classification.macro_precision,
        macro_recall: classification.macro_recall,
        macro_f1: classification.macro_f1,
        attachment_precision: if attachment_total == 0 {
            1.0
        } else {
            attachment_correct as f64 / attachment_total as f64
        },
        attachment_recall: if attachment_total == 0 {
            1.0
        } else {
            attachment_correct as f64 / attachment_total as f64
        },
        followup_accuracy: if followup_total == 0 {
            1.0
        } else {
            followup_correct as f64 / followup_total as f64
        },
        kappa,
        tier_query_share,
        tier_cost_share,
        premium_llm_cost_share,
        routed_total_cost: ledger.total_cost,
        replay_total_cost,
        cost_ratio_vs_replay: if replay_total_cost == 0.0 {
            0.0
        } else {
            ledger.total_cost / replay_total_cost
        },
        replay_premium_cost_share,
        mean_latency_by_modality: latency_by_modality
            .into_iter()
            .map(|(m, (sum, count))| (m, sum / count as f64))
            .collect(),
        routed_mean_latency_ms: routed_latency_sum / n.max(1) as f64,
        replay_mean_latency_ms: if include_replay {
            replay_latency_sum / n.max(1) as f64
        } else {
            0.0
        },
        throughput_qps: throughput(routed_latency_sum),
        replay_throughput_qps: throughput(replay_latency_sum),
        mean_tfidf_cosine: similarity.mean_tfidf_cosine,
        mean_embedding_cosine: similarity.mean_embedding_cosine,
        high_similarity_fraction: similarity.high_similarity_fraction,
    })
}

/// Metrics table as CSV.
pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric,value\n");
    let mut push = |k: &str, v: f64| out.push_str(&format!("{k},{v:.6}\n"));
    push("coarse_accuracy", report.coarse_accuracy);
    push("fine_accuracy", report.fine_accuracy);
    push("macro_precision", report.macro_precision);
    push("macro_recall", report.macro_recall);
    push("macro_f1", report.macro_f1);
    push("attachment_precision", report.attachment_precision);
    push("attachment_recall", report.attachment_recall);
    push("followup_accuracy", report.followup_accuracy);
    push("kappa", report.kappa);
    push("premium_llm_cost_share", report.premium_llm_cost_share);
    push("routed_total_cost", report.routed_total_cost);
    push("replay_total_cost", report.replay_total_cost);
    push("cost_ratio_vs_replay", report.cost_ratio_vs_replay);
    push("routed_mean_latency_ms", report.routed_mean_latency_ms);
    push("replay_mean_latency_ms", report.replay_mean_latency_ms);
    push("throughput_qps", report.throughput_qps);
    push("replay_throughput_qps", report.replay_throughput_qps);
    push("mean_tfidf_cosine", report.mean_tfidf_cosine);
    push("mean_embedding_cosine", report.mean_embedding_cosine);
    push("high_similarity_fraction", report.high_similarity_fraction);
    out
}

/// Cost breakdown as CSV, one row per tier.
pub fn cost_csv(report: &EvalReport) -> String {
    let mut out = String::from("tier,query_share_pct,cost_share_pct\n");
    for tier in BackendTier::ALL {
        out.push_str(&format!(
            "{},{:.3},{:.3}\n",
            tier.as_str(),
            report.tier_query_share.get(&tier).copied().unwrap_or(0.0),
            report.tier_cost_share.get(&tier).copied().unwrap_or(0.0),
        ));
    }
    out
}

/// Latency per modality as CSV.
pub fn latency_csv(report: &EvalReport) -> String {
    let mut out = String::from("modality,mean_latency_ms\n");
    for (modality, latency) in &report.mean_latency_by_modality {
        out.push_str(&format!("{modality},{latency:.3}\n"));
    }
    out
}

/// Pareto rows as CSV.
pub fn pareto_csv(rows: &[ParetoRow]) -> String {
    let mut out = String::from("tau,lambda_c,cost,accuracy,pareto_optimal\n");
    for row in rows {
        out.push_str(&format!(
            "{:.3},{:.3},{:.6},{:.6},{}\n",
            row.tau, row.lambda_c, row.cost, row.accuracy, row.pareto_optimal
        ));
    }
    out
}

/// Human-readable report summary.
pub fn summary_text(report: &EvalReport) -> String {
    let open_q = report.tier_query_share.get(&BackendTier::OpenSource).copied().unwrap_or(0.0);
    let open_c = report.tier_cost_share.get(&BackendTier::OpenSource).copied().unwrap_or(0.0);
    format!(
        "records: {}\nseed: {}\ncoarse routing accuracy: {:.4}\nfine (13-way) accuracy: {:.4}\n\
         macro precision / recall / f1: {:.4} / {:.4} / {:.4}\nattachment detection P/R: {:.2}/{:.2}\n\
         follow-up accuracy: {:.4}\nannotator kappa: {:.4}\nopen-tier query share: {:.1}%\n\
         open-tier cost share: {:.1}%\npremium-llm cost share: {:.1}%\nrouted cost: {:.2} \
         (replay: {:.2}, ratio {:.3})\nmean latency routed/replay: {:.1} / {:.1} ms\n\
         throughput routed/replay: {:.1} / {:.1} qps\nsimilarity tfidf/embedding: {:.4} / {:.4}\n\
         high-similarity fraction: {:.4}\n",
        report.records,
        report.seed,
        report.coarse_accuracy,
        report.fine_accuracy,
        report.macro_precision,
        report.macro_recall,
        report.macro_f1,
        report.attachment_precision,
        report.attachment_recall,
        report.followup_accuracy,
        report.kappa,
        open_q,
        open_c,
        report.premium_llm_cost_share,
        report.routed_total_cost,
        report.replay_total_cost,
        report.cost_ratio_vs_replay,
        report.routed_mean_latency_ms,
        report.replay_mean_latency_ms,
        report.throughput_qps,
        report.replay_throughput_qps,
        report.mean_tfidf_cosine,
        report.mean_embedding_cosine,
        report.high_similarity_fraction,
    )
}
