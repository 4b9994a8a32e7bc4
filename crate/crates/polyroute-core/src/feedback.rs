//! Feedback ingestion, automatic fallback re-execution, reroute on
//! reported routing errors, and the rule-based adjustment digest.
//!
//! An unsatisfactory answer retries on the strongest policy-compliant
//! route (premium when allowed, otherwise the best efficient route); a
//! reported routing error excludes the original route and re-selects
//! over the remainder. Both outcomes log the original and retry
//! decisions with their quality differential; the digest aggregates
//! misroute counts per (category, route) for a later sweep, which is the
//! whole extent of policy adjustment here; there is no online learning.

use serde::{Deserialize, Serialize};

use crate::backend::{derive_seed, BackendPool, ExecRequest};
use crate::model::{Modality, PolicyMode, TaskCategory, UserPolicy};
use crate::planner::{select_route, Route, RouteKind, RouteQuery, RoutingWeights};
use crate::{Error, Result};

/// What the user reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Unsatisfactory,
    RoutingError,
}

/// The specific problem behind a routing error report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportedProblem {
    WrongModel,
    WrongModality,
    MissingContext,
}

/// One feedback event against an answered query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub query_id: String,
    pub kind: FeedbackKind,
    pub reported_problem: Option<ReportedProblem>,
    pub timestamp: u64,
}

impl FeedbackEvent {
    pub fn validate(&self) -> Result<()> {
        if self.kind == FeedbackKind::RoutingError && self.reported_problem.is_none() {
            return Err(Error::InvalidConfig(
                "routing_error feedback requires a reported problem".into(),
            ));
        }
        Ok(())
    }
}

/// The logged outcome a feedback event is judged against: the original
/// decision plus everything needed to re-execute the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalOutcome {
    pub query_id: String,
    pub category: TaskCategory,
    pub modality: Modality,
    pub attachment_modalities: Vec<Modality>,
    pub policy: UserPolicy,
    pub route_id: String,
    pub backend_id: String,
    pub confidence: f64,
    pub request: ExecRequest,
}

/// Original-versus-retry record with the confidence differential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentRecord {
    pub query_id: String,
    pub category: TaskCategory,
    pub modality: Modality,
    pub original_route: String,
    pub original_backend: String,
    pub original_confidence: f64,
    pub retry_route: String,
    pub retry_backend: String,
    pub retry_confidence: f64,
    pub retry_payload: String,
    /// retry confidence minus original confidence.
    pub quality_differential: f64,
    pub rule_id: String,
}

/// Handles one feedback event: picks the retry route per the rule for the
/// event kind, re-executes, and returns the adjustment record. A missing
/// alternative is an error the caller logs as the no-retry reason.
pub fn handle_feedback(
    event: &FeedbackEvent,
    original: &OriginalOutcome,
    routes: &[Route],
    weights: &RoutingWeights,
    pool: &BackendPool,
    run_seed: u64,
) -> Result<AdjustmentRecord> {
    event.validate()?;
    if event.query_id != original.query_id {
        return Err(Error::UnknownQuery(event.query_id.clone()));
    }
    let ctx = RouteQuery {
        modality: original.modality,
        attachment_modalities: original.attachment_modalities.clone(),
        category: original.category,
        policy: original.policy,
    };

    let (retry_route, rule_id) = match event.kind {
        FeedbackKind::Unsatisfactory => {
            // Strongest policy-compliant pool: premium when the policy
            // allows it, otherwise the best efficient route. Picking the
            // original again means there is nothing stronger to try.
            let preferred: Vec<Route> = if original.policy.premium_allowed() {
                routes.iter().filter(|r| r.kind == RouteKind::Premium).cloned().collect()
            } else {
                routes.iter().filter(|r| r.kind == RouteKind::Efficient).cloned().collect()
            };
            let decision = select_route(&ctx, &preferred, weights)
                .map_err(|_| Error::NoAlternativeRoute)?;
            if decision.chosen.id == original.route_id {
                return Err(Error::NoAlternativeRoute);
            }
            (decision.chosen, "unsatisfactory_fallback")
        }
        FeedbackKind::RoutingError => {
            // Exclude the misrouted path and re-select over the rest.
            let remainder: Vec<Route> = routes
                .iter()
                .filter(|r| r.id != original.route_id && r.kind != RouteKind::AgentCascade)
                .cloned()
                .collect();
            let decision = select_route(&ctx, &remainder, weights)
                .map_err(|_| Error::NoAlternativeRoute)?;
            (decision.chosen, "routing_error_reroute")
        }
    };

    let seed = derive_seed(
        run_seed,
        &[&original.query_id, "feedback-retry", &retry_route.backend_id],
    );
    let retry = pool.execute(&retry_route.backend_id, &original.request, seed)?;

    Ok(AdjustmentRecord {
        query_id: original.query_id.clone(),
        category: original.category,
        modality: original.modality,
        original_route: original.route_id.clone(),
        original_backend: original.backend_id.clone(),
        original_confidence: original.confidence,
        retry_route: retry_route.id,
        retry_backend: retry.backend_id.clone(),
        retry_confidence: retry.confidence,
        retry_payload: retry.payload,
        quality_differential: retry.confidence - original.confidence,
        rule_id: rule_id.to_string(),
    })
}

/// One line of the append-only feedback log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLogEntry {
    pub event: FeedbackEvent,
    pub category: TaskCategory,
    pub original_route: String,
    pub outcome: FeedbackOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackOutcome {
    Retried(Box<AdjustmentRecord>),
    NoRetry { reason: String },
}

/// Aggregate row of the adjustment digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestRow {
    pub category: TaskCategory,
    pub route_id: String,
    pub events: usize,
    pub misroutes: usize,
    pub misroute_rate: f64,
    pub mean_quality_differential: f64,
    pub flagged: bool,
}

/// Aggregates the feedback log per (category, original route): misroute
/// counts, rates, and the mean quality differential over retried events.
/// Rows whose misroute rate reaches `flag_threshold` are flagged for a
/// human or a sweep re-run.
pub fn adjustment_digest(log: &[FeedbackLogEntry], flag_threshold: f64) -> Vec<DigestRow> {
    let mut rows: Vec<DigestRow> = Vec::new();
    for entry in log {
        let key = (entry.category, entry.original_route.clone());
        if !rows.iter().any(|r| (r.category, r.route_id.clone()) == key) {
            rows.push(DigestRow {
                category: entry.category,
                route_id: entry.original_route.clone(),
                events: 0,
                misroutes: 0,
                misroute_rate: 0.0,
                mean_quality_differential: 0.0,
                flagged: false,
            });
        }
        let row = rows
            .iter_mut()
            .find(|r| r.category == entry.category && r.route_id == entry.original_route)
            .expect("row just ensured");
        row.events += 1;
        if entry.event.kind == FeedbackKind::RoutingError {
            row.misroutes += 1;
        }
    }
    for row in &mut rows {
        let differentials: Vec<f64> = log
            .iter()
            .filter(|e| e.category == row.category && e.original_route == row.route_id)
            .filter_map(|e| match &e.outcome {
                FeedbackOutcome::Retried(r) => Some(r.quality_differential),
                FeedbackOutcome::NoRetry { .. } => None,
            })
            .collect();
        if !differentials.is_empty() {
            row.mean_quality_differential =
                differentials.iter().sum::<f64>() / differentials.len() as f64;
        }
        row.misroute_rate = if row.events == 0 {
            0.0
        } else {
            row.misroutes as f64 / row.events as f64
        };
        row.flagged = row.misroute_rate >= flag_threshold;
    }
    rows.sort_by(|a, b| {
        a.category.index().cmp(&b.category.index()).then(a.route_id.cmp(&b.route_id))
    });
    rows
}

/// True when a retry is allowed to name a premium route under `policy`.
pub fn premium_retry_allowed(policy: UserPolicy) -> bool {
    policy.mode != PolicyMode::OpenSourceOnly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendPool, PoolConfig};
    use crate::config::bundled_routes;

    fn pool() -> BackendPool {
        BackendPool::new(PoolConfig::bundled()).unwrap()
    }

    fn outcome(category: TaskCategory, modality: Modality, route_id: &str, policy: UserPolicy) -> OriginalOutcome {
        OriginalOutcome {
            query_id: "q1".into(),
            category,
            modality,
            attachment_modalities: if modality == Modality::Text {
                vec![]
            } else {
                vec![modality]
            },
            policy,
            route_id: route_id.into(),
            backend_id: "open-chat".into(),
            confidence: 0.62,
            request: ExecRequest {
                query_id: "q1".into(),
                category,
                modality,
                text: "the original request".into(),
                context: String::new(),
            },
        }
    }

    fn event(kind: FeedbackKind, problem: Option<ReportedProblem>) -> FeedbackEvent {
        FeedbackEvent { query_id: "q1".into(), kind, reported_problem: problem, timestamp: 1 }
    }

    #[test]
    fn routing_error_requires_a_problem() {
        assert!(event(FeedbackKind::RoutingError, None).validate().is_err());
        assert!(event(FeedbackKind::RoutingError, Some(ReportedProblem::WrongModel))
            .validate()
            .is_ok());
    }

    #[test]
    fn unsatisfactory_with_premium_allowed_retries_on_premium() {
        let routes = bundled_routes();
        let record = handle_feedback(
            &event(FeedbackKind::Unsatisfactory, None),
            &outcome(TaskCategory::General, Modality::Text, "eff-chat", UserPolicy::default()),
            &routes,
            &RoutingWeights::default(),
            &pool(),
            9,
        )
        .unwrap();
        assert_eq!(record.retry_route, "premium-text");
        assert_eq!(record.rule_id, "unsatisfactory_fallback");
        assert!((record.quality_differential - (record.retry_confidence - 0.62)).abs() < 1e-12);
    }

    #[test]
    fn wrong_modality_reroute_lands_on_the_document_pipeline() {
        // A document query misrouted to the vision pipeline: excluding it
        // and re-selecting with the true modality lands on documents.
        let routes = bundled_routes();
        let record = handle_feedback(
            &event(FeedbackKind::RoutingError, Some(ReportedProblem::WrongModality)),
            &outcome(TaskCategory::Document, Modality::Document, "pipe-vision", UserPolicy::default()),
            &routes,
            &RoutingWeights::default(),
            &pool(),
            9,
        )
        .unwrap();
        assert_eq!(record.retry_route, "pipe-document");
        assert_eq!(record.rule_id, "routing_error_reroute");
    }

    #[test]
    fn reroute_never_selects_the_excluded_route() {
        let routes = bundled_routes();
        for category in [TaskCategory::Vision, TaskCategory::Document, TaskCategory::General] {
            let modality = match category {
                TaskCategory::Vision => Modality::Image,
                TaskCategory::Document => Modality::Document,
                _ => Modality::Text,
            };
            for original_route in ["pipe-vision", "pipe-document", "eff-chat"] {
                let record = handle_feedback(
                    &event(FeedbackKind::RoutingError, Some(ReportedProblem::WrongModel)),
                    &outcome(category, modality, original_route, UserPolicy::default()),
                    &routes,
                    &RoutingWeights::default(),
                    &pool(),
                    3,
                );
                if let Ok(r) = record {
                    assert_ne!(r.retry_route, original_route);
                }
            }
        }
    }

    #[test]
    fn strongest_open_route_cannot_fall_back_further() {
        let routes = bundled_routes();
        // eff-chat is the best efficient route for `general`; under an
        // open-only policy there is nothing stronger left.
        let err = handle_feedback(
            &event(FeedbackKind::Unsatisfactory, None),
            &outcome(TaskCategory::General, Modality::Text, "eff-chat", UserPolicy::open_only()),
            &routes,
            &RoutingWeights::default(),
            &pool(),
            9,
        );
        assert!(matches!(err, Err(Error::NoAlternativeRoute)));
    }

    #[test]
    fn no_premium_retry_under_open_only_policy() {
        let routes = bundled_routes();
        let record = handle_feedback(
            &event(FeedbackKind::Unsatisfactory, None),
            &outcome(TaskCategory::Coding, Modality::Text, "eff-chat", UserPolicy::open_only()),
            &routes,
            &RoutingWeights::default(),
            &pool(),
            9,
        )
        .unwrap();
        // Falls back to the strongest efficient coding route, not premium.
        assert_eq!(record.retry_route, "eff-code");
    }

    #[test]
    fn empty_log_digests_to_nothing() {
        assert!(adjustment_digest(&[], 0.5).is_empty());
    }

    #[test]
    fn repeated_misroutes_flag_the_pair_at_rate_one() {
        let entries: Vec<FeedbackLogEntry> = (0..10)
            .map(|i| FeedbackLogEntry {
                event: FeedbackEvent {
                    query_id: format!("q{i}"),
                    kind: FeedbackKind::RoutingError,
                    reported_problem: Some(ReportedProblem::WrongModality),
                    timestamp: i,
                },
                category: TaskCategory::Document,
                original_route: "pipe-vision".into(),
                outcome: FeedbackOutcome::NoRetry { reason: "test".into() },
            })
            .collect();
        let digest = adjustment_digest(&entries, 0.5);
        assert_eq!(digest.len(), 1);
        assert_eq!(digest[0].misroutes, 10);
        assert!((digest[0].misroute_rate - 1.0).abs() < 1e-12);
        assert!(digest[0].flagged);
    }

    #[test]
    fn mixed_log_counts_match_a_hand_tally() {
        let retried = |differential: f64| {
            FeedbackOutcome::Retried(Box::new(AdjustmentRecord {
                query_id: "q".into(),
                category: TaskCategory::Math,
                modality: Modality::Text,
                original_route: "eff-math".into(),
                original_backend: "open-math".into(),
                original_confidence: 0.5,
                retry_route: "premium-text".into(),
                retry_backend: "premium-core".into(),
                retry_confidence: 0.5 + differential,
                retry_payload: String::new(),
                quality_differential: differential,
                rule_id: "unsatisfactory_fallback".into(),
            }))
        };
        let mk = |kind, route: &str, outcome| FeedbackLogEntry {
            event: FeedbackEvent {
                query_id: "q".into(),
                kind,
                reported_problem: matches!(kind, FeedbackKind::RoutingError)
                    .then_some(ReportedProblem::WrongModel),
                timestamp: 0,
            },
            category: TaskCategory::Math,
            original_route: route.into(),
            outcome,
        };
        let log = vec![
            mk(FeedbackKind::Unsatisfactory, "eff-math", retried(0.2)),
            mk(FeedbackKind::Unsatisfactory, "eff-math", retried(0.4)),
            mk(FeedbackKind::RoutingError, "eff-math", FeedbackOutcome::NoRetry { reason: "x".into() }),
            mk(FeedbackKind::RoutingError, "eff-chat", FeedbackOutcome::NoRetry { reason: "x".into() }),
        ];
        let digest = adjustment_digest(&log, 0.5);
        // Hand tally: eff-math has 3 events, 1 misroute, mean diff 0.3;
        // eff-chat has 1 event, 1 misroute.
        let math_row = digest.iter().find(|r| r.route_id == "eff-math").unwrap();
        assert_eq!(math_row.events, 3);
        assert_eq!(math_row.misroutes, 1);
        assert!((math_row.mean_quality_differential - 0.3).abs() < 1e-12);
        assert!(!math_row.flagged);
        let chat_row = digest.iter().find(|r| r.route_id == "eff-chat").unwrap();
        assert_eq!(chat_row.events, 1);
        assert!(chat_row.flagged);
    }
}
