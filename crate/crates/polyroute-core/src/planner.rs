//! Route selection: the weighted utility objective, hard policy
//! filtering, and the case analysis for text and non-text queries.
//!
//! Utility of a route is `dm*S_m + du*S_u + dt*S_t - lc*C_r` where S_m is
//! binary modality support, S_u binary policy compliance, S_t the route's
//! task affinity, and C_r its normalized cost. Premium routes are removed
//! before scoring under an open-source-only policy, so budget compliance
//! is a hard guarantee rather than a scoring preference. Every decision
//! carries its full per-candidate component table for audit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::BackendTier;
use crate::complexity::ComplexityProfile;
use crate::model::{Modality, TaskCategory, UserPolicy};
use crate::{Error, Result};

/// Routing weights, l1-normalized with the priority ordering
/// dm >= du >= dt enforced at load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingWeights {
    pub delta_m: f64,
    pub delta_u: f64,
    pub delta_t: f64,
    pub lambda_c: f64,
}

impl RoutingWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.delta_m, self.delta_u, self.delta_t, self.lambda_c];
        if all.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidConfig("routing weights must be non-negative".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("routing weights must sum to 1, got {sum}")));
        }
        if !(self.delta_m >= self.delta_u && self.delta_u >= self.delta_t) {
            return Err(Error::InvalidConfig(
                "routing weights must honor dm >= du >= dt".into(),
            ));
        }
        Ok(())
    }
}

impl Default for RoutingWeights {
    fn default() -> Self {
        Self { delta_m: 0.40, delta_u: 0.30, delta_t: 0.20, lambda_c: 0.10 }
    }
}

/// The executable path kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    Efficient,
    Premium,
    AgentCascade,
    Couplet,
    ModalityPipeline(Modality),
}

/// An executable route bound to a backend with a cost profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    pub kind: RouteKind,
    pub backend_id: String,
    /// Tier of the referenced backend; validated against the pool at load.
    pub tier: BackendTier,
    pub supported_modalities: Vec<Modality>,
    /// Task affinity in [0,1]; categories absent from the map score 0.5.
    pub task_affinity: BTreeMap<TaskCategory, f64>,
    /// C_r in cost units; clamped to [0,1] inside the penalty term.
    pub cost: f64,
}

impl Route {
    pub fn affinity(&self, category: TaskCategory) -> f64 {
        self.task_affinity.get(&category).copied().unwrap_or(0.5)
    }

    pub fn supports(&self, modality: Modality) -> bool {
        self.supported_modalities.contains(&modality)
    }

    fn normalized_cost(&self) -> f64 {
        self.cost.min(1.0)
    }
}

/// Query-side context the scorer needs.
#[derive(Debug, Clone)]
pub struct RouteQuery {
    pub modality: Modality,
    pub attachment_modalities: Vec<Modality>,
    pub category: TaskCategory,
    pub policy: UserPolicy,
}

/// Per-candidate score components, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub route_id: String,
    pub s_m: f64,
    pub s_u: f64,
    pub s_t: f64,
    pub cost: f64,
    pub utility: f64,
}

/// Why a candidate was removed before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    PremiumNotAllowed,
    OverBudget,
}

/// Which case of the text-routing equation (or the non-text dispatch)
/// produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteRationale {
    EfficientPool,
    PremiumEscalation,
    PremiumSubstituted,
    CascadeFallback,
    ImageGenRedirect,
    FollowUpMoe,
    ModalityDispatch,
    DirectSelect,
}

/// An auditable routing decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub chosen: Route,
    pub utility: f64,
    pub components: Vec<CandidateScore>,
    pub excluded: Vec<(String, ExclusionReason)>,
    pub rationale: RouteRationale,
}

/// Scores one route for one query context.
pub fn score_route(ctx: &RouteQuery, route: &Route, w: &RoutingWeights) -> CandidateScore {
    let modality_ok = route.supports(ctx.modality)
        && ctx.attachment_modalities.iter().all(|m| route.supports(*m));
    let s_m = if modality_ok { 1.0 } else { 0.0 };
    let s_u = if route.tier == BackendTier::Premium && !ctx.policy.premium_allowed() {
        0.0
    } else {
        1.0
    };
    let s_t = route.affinity(ctx.category);
    let cost = route.normalized_cost();
    let utility = w.delta_m * s_m + w.delta_u * s_u + w.delta_t * s_t - w.lambda_c * cost;
    CandidateScore { route_id: route.id.clone(), s_m, s_u, s_t, cost, utility }
}

/// Hard policy filter, then argmax over the survivors. Ties break toward
/// lower cost, then lexicographic route id, so decisions replay exactly.
pub fn select_route(
    ctx: &RouteQuery,
    candidates: &[Route],
    w: &RoutingWeights,
) -> Result<RoutingDecision> {
    let mut excluded = Vec::new();
    let mut feasible: Vec<&Route> = Vec::new();
    for route in candidates {
        if route.tier == BackendTier::Premium && !ctx.policy.premium_allowed() {
            excluded.push((route.id.clone(), ExclusionReason::PremiumNotAllowed));
        } else if !ctx.policy.unlimited && route.cost > ctx.policy.cost_budget {
            excluded.push((route.id.clone(), ExclusionReason::OverBudget));
        } else {
            feasible.push(route);
        }
    }
    if feasible.is_empty() {
        return Err(Error::NoFeasibleRoute);
    }
    let components: Vec<CandidateScore> =
        feasible.iter().map(|r| score_route(ctx, r, w)).collect();
    let best_index = argmax_index(&components);
    let chosen = feasible[best_index].clone();
    let utility = components[best_index].utility;
    Ok(RoutingDecision {
        chosen,
        utility,
        components,
        excluded,
        rationale: RouteRationale::DirectSelect,
    })
}

fn argmax_index(components: &[CandidateScore]) -> usize {
    let mut best = 0usize;
    for i in 1..components.len() {
        let (a, b) = (&components[i], &components[best]);
        let better = match a.utility.partial_cmp(&b.utility).expect("finite utilities") {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => match a.cost.partial_cmp(&b.cost).unwrap() {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => a.route_id < b.route_id,
            },
        };
        if better {
            best = i;
        }
    }
    best
}

/// Affinity at or above which a route counts as the dedicated follow-up
/// path; the bundled registry gives exactly one route such an affinity.
pub const FOLLOWUP_AFFINITY_FLOOR: f64 = 0.9;

/// Case analysis for text queries.
///
/// Special categories first: image generation redirects to the image
/// pipeline, follow-ups to the dedicated MoE route. Complex and ambiguous
/// intents fall back to the agent cascade. Otherwise the score decides:
/// below tau stays on the efficient pool, at or above tau escalates to
/// premium, or to the strongest efficient routes when the policy forbids
/// premium.
pub fn route_text(
    profile: &ComplexityProfile,
    category: TaskCategory,
    tau: f64,
    policy: UserPolicy,
    candidates: &[Route],
    w: &RoutingWeights,
) -> Result<RoutingDecision> {
    let ctx = RouteQuery {
        modality: Modality::Text,
        attachment_modalities: Vec::new(),
        category,
        policy,
    };
    let (subset, rationale): (Vec<Route>, RouteRationale) = match category {
        TaskCategory::ImageGen => (
            candidates
                .iter()
                .filter(|r| r.kind == RouteKind::ModalityPipeline(Modality::Image))
                .cloned()
                .collect(),
            RouteRationale::ImageGenRedirect,
        ),
        TaskCategory::TextMoe => (
            candidates
                .iter()
                .filter(|r| r.affinity(TaskCategory::TextMoe) >= FOLLOWUP_AFFINITY_FLOOR)
                .cloned()
                .collect(),
            RouteRationale::FollowUpMoe,
        ),
        TaskCategory::Complex | TaskCategory::Ambiguous => (
            candidates.iter().filter(|r| r.kind == RouteKind::AgentCascade).cloned().collect(),
            RouteRationale::CascadeFallback,
        ),
        _ if profile.score >= tau => {
            if policy.premium_allowed() {
                (
                    candidates.iter().filter(|r| r.kind == RouteKind::Premium).cloned().collect(),
                    RouteRationale::PremiumEscalation,
                )
            } else {
                (
                    candidates.iter().filter(|r| r.kind == RouteKind::Efficient).cloned().collect(),
                    RouteRationale::PremiumSubstituted,
                )
            }
        }
        _ => (
            candidates.iter().filter(|r| r.kind == RouteKind::Efficient).cloned().collect(),
            RouteRationale::EfficientPool,
        ),
    };
    if subset.is_empty() {
        return Err(Error::NoFeasibleRoute);
    }
    let mut decision = select_route(&ctx, &subset, w)?;
    decision.rationale = rationale;
    Ok(decision)
}

/// Dispatch for non-text and hybrid queries: modality pipelines, the
/// couplet path, and the agent cascade compete on utility. Complexity
/// scoring is bypassed entirely.
pub fn route_nontext(
    modality: Modality,
    attachment_modalities: Vec<Modality>,
    category: TaskCategory,
    policy: UserPolicy,
    candidates: &[Route],
    w: &RoutingWeights,
) -> Result<RoutingDecision> {
    let ctx = RouteQuery { modality, attachment_modalities, category, policy };
    let subset: Vec<Route> = candidates
        .iter()
        .filter(|r| {
            matches!(
                r.kind,
                RouteKind::ModalityPipeline(_) | RouteKind::Couplet | RouteKind::AgentCascade
            )
        })
        .cloned()
        .collect();
    if subset.is_empty() {
        return Err(Error::NoFeasibleRoute);
    }
    let mut decision = select_route(&ctx, &subset, w)?;
    decision.rationale = RouteRationale::ModalityDispatch;
    Ok(decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SplitMix64;
    use crate::complexity::{ClassDistribution, ComplexityProfile};

    fn route(id: &str, kind: RouteKind, tier: BackendTier, cost: f64) -> Route {
        Route {
            id: id.into(),
            kind,
            backend_id: format!("{id}-backend"),
            tier,
            supported_modalities: vec![Modality::Text],
            task_affinity: BTreeMap::new(),
            cost,
        }
    }

    fn ctx(category: TaskCategory, policy: UserPolicy) -> RouteQuery {
        RouteQuery {
            modality: Modality::Text,
            attachment_modalities: Vec::new(),
            category,
            policy,
        }
    }

    fn profile(score: f64) -> ComplexityProfile {
        ComplexityProfile {
            intent_align: score,
            linguistic: score,
            structural: score,
            score,
            class_dist: ClassDistribution { low: 1.0, medium: 0.0, high: 0.0 },
            signals: Vec::new(),
        }
    }

    #[test]
    fn perfect_match_at_zero_cost_sums_the_deltas() {
        let w = RoutingWeights::default();
        let mut r = route("r1", RouteKind::Efficient, BackendTier::OpenSource, 0.0);
        r.task_affinity.insert(TaskCategory::General, 1.0);
        let s = score_route(&ctx(TaskCategory::General, UserPolicy::default()), &r, &w);
        assert!((s.utility - (w.delta_m + w.delta_u + w.delta_t)).abs() < 1e-12);
    }

    #[test]
    fn modality_mismatch_drops_utility_by_delta_m() {
        let w = RoutingWeights::default();
        let mut r = route("r1", RouteKind::Efficient, BackendTier::OpenSource, 0.0);
        r.task_affinity.insert(TaskCategory::General, 1.0);
        let matched = score_route(&ctx(TaskCategory::General, UserPolicy::default()), &r, &w);
        let mut mismatched_ctx = ctx(TaskCategory::General, UserPolicy::default());
        mismatched_ctx.modality = Modality::Image;
        let mismatched = score_route(&mismatched_ctx, &r, &w);
        assert!((matched.utility - mismatched.utility - w.delta_m).abs() < 1e-12);
    }

    #[test]
    fn three_route_fixture_matches_hand_arithmetic() {
        let w = RoutingWeights::default();
        let policy = UserPolicy::default();
        let mut a = route("a", RouteKind::Efficient, BackendTier::OpenSource, 0.05);
        a.task_affinity.insert(TaskCategory::Coding, 0.95);
        let mut b = route("b", RouteKind::Premium, BackendTier::Premium, 0.30);
        b.task_affinity.insert(TaskCategory::Coding, 0.97);
        let mut c = route("c", RouteKind::Efficient, BackendTier::OpenSource, 0.05);
        c.task_affinity.insert(TaskCategory::Coding, 0.40);
        let q = ctx(TaskCategory::Coding, policy);

        // By hand: u = 0.4*1 + 0.3*1 + 0.2*S_t - 0.1*C_r
        let ua = 0.4 + 0.3 + 0.2 * 0.95 - 0.1 * 0.05; // 0.885
        let ub = 0.4 + 0.3 + 0.2 * 0.97 - 0.1 * 0.30; // 0.864
        let uc = 0.4 + 0.3 + 0.2 * 0.40 - 0.1 * 0.05; // 0.775
        assert!((score_route(&q, &a, &w).utility - ua).abs() < 1e-12);
        assert!((score_route(&q, &b, &w).utility - ub).abs() < 1e-12);
        assert!((score_route(&q, &c, &w).utility - uc).abs() < 1e-12);

        let decision = select_route(&q, &[a, b, c], &w).unwrap();
        assert_eq!(decision.chosen.id, "a");
        assert!((decision.utility - ua).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_is_chosen_trivially() {
        let w = RoutingWeights::default();
        let r = route("only", RouteKind::Efficient, BackendTier::OpenSource, 0.1);
        let d =
            select_route(&ctx(TaskCategory::General, UserPolicy::default()), &[r], &w).unwrap();
        assert_eq!(d.chosen.id, "only");
    }

    #[test]
    fn open_only_policy_with_premium_candidates_is_infeasible() {
        let w = RoutingWeights::default();
        let r = route("p", RouteKind::Premium, BackendTier::Premium, 1.0);
        let err = select_route(&ctx(TaskCategory::General, UserPolicy::open_only()), &[r], &w);
        assert!(matches!(err, Err(Error::NoFeasibleRoute)));
    }

    #[test]
    fn excluded_routes_never_win() {
        let w = RoutingWeights::default();
        let mut p = route("p", RouteKind::Premium, BackendTier::Premium, 0.0);
        p.task_affinity.insert(TaskCategory::General, 1.0);
        let e = route("e", RouteKind::Efficient, BackendTier::OpenSource, 0.9);
        let d = select_route(&ctx(TaskCategory::General, UserPolicy::open_only()), &[p, e], &w)
            .unwrap();
        assert_eq!(d.chosen.id, "e");
        assert_eq!(d.excluded, vec![("p".to_string(), ExclusionReason::PremiumNotAllowed)]);
        assert!(d.excluded.iter().all(|(id, _)| *id != d.chosen.id));
    }

    #[test]
    fn decision_utility_recomputes_from_stored_components() {
        let w = RoutingWeights::default();
        let mut a = route("a", RouteKind::Efficient, BackendTier::OpenSource, 0.2);
        a.task_affinity.insert(TaskCategory::Math, 0.8);
        let b = route("b", RouteKind::Efficient, BackendTier::OpenSource, 0.1);
        let d =
            select_route(&ctx(TaskCategory::Math, UserPolicy::default()), &[a, b], &w).unwrap();
        let stored = d.components.iter().find(|c| c.route_id == d.chosen.id).unwrap();
        let recomputed = w.delta_m * stored.s_m + w.delta_u * stored.s_u + w.delta_t * stored.s_t
            - w.lambda_c * stored.cost;
        assert!((recomputed - d.utility).abs() < 1e-9);
    }

    #[test]
    fn adding_a_constant_to_every_utility_keeps_the_argmax() {
        let w = RoutingWeights::default();
        let routes: Vec<Route> = (0..5)
            .map(|i| {
                let mut r = route(
                    &format!("r{i}"),
                    RouteKind::Efficient,
                    BackendTier::OpenSource,
                    0.1 * i as f64,
                );
                r.task_affinity.insert(TaskCategory::General, 0.2 * i as f64);
                r
            })
            .collect();
        let d = select_route(&ctx(TaskCategory::General, UserPolicy::default()), &routes, &w)
            .unwrap();
        let mut shifted = d.components.clone();
        for c in &mut shifted {
            c.utility += 123.456;
        }
        assert_eq!(
            shifted[argmax_index(&shifted)].route_id,
            d.components[argmax_index(&d.components)].route_id
        );
    }

    #[test]
    fn raising_chosen_cost_eventually_loses_the_argmax() {
        let w = RoutingWeights::default();
        let mut a = route("a", RouteKind::Efficient, BackendTier::OpenSource, 0.0);
        a.task_affinity.insert(TaskCategory::General, 0.9);
        let mut b = route("b", RouteKind::Efficient, BackendTier::OpenSource, 0.0);
        b.task_affinity.insert(TaskCategory::General, 0.6);
        let q = ctx(TaskCategory::General, UserPolicy::default());
        let baseline = select_route(&q, &[a.clone(), b.clone()], &w).unwrap();
        assert_eq!(baseline.chosen.id, "a");

        let mut utilities = Vec::new();
        for cost in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let mut pricier = a.clone();
            pricier.cost = cost;
            let s = score_route(&q, &pricier, &w);
            utilities.push(s.utility);
        }
        for pair in utilities.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        let mut expensive = a.clone();
        expensive.cost = 1.0; // penalty now outweighs the affinity edge
        let d = select_route(&q, &[expensive, b], &w).unwrap();
        assert_eq!(d.chosen.id, "b");
    }

    #[test]
    fn select_route_matches_exhaustive_oracle_on_random_instances() {
        let w = RoutingWeights::default();
        let mut rng = SplitMix64::new(0xfeed);
        for trial in 0..100 {
            let n = 1 + (rng.next_u64() % 6) as usize;
            let routes: Vec<Route> = (0..n)
                .map(|i| {
                    let kind = match rng.next_u64() % 3 {
                        0 => RouteKind::Efficient,
                        1 => RouteKind::Premium,
                        _ => RouteKind::ModalityPipeline(Modality::Image),
                    };
                    let tier = if matches!(kind, RouteKind::Premium) {
                        BackendTier::Premium
                    } else {
                        BackendTier::OpenSource
                    };
                    let mut r = route(&format!("t{trial}-r{i}"), kind, tier, rng.next_f64());
                    r.supported_modalities = if rng.next_f64() < 0.7 {
                        vec![Modality::Text]
                    } else {
                        vec![Modality::Image]
                    };
                    r.task_affinity.insert(TaskCategory::General, rng.next_f64());
                    r
                })
                .collect();
            let policy = if rng.next_f64() < 0.3 {
                UserPolicy::open_only()
            } else {
                UserPolicy::default()
            };
            let q = ctx(TaskCategory::General, policy);

            // Oracle: brute-force the feasible set and the exact argmax rule.
            let feasible: Vec<&Route> = routes
                .iter()
                .filter(|r| policy.premium_allowed() || r.tier != BackendTier::Premium)
                .collect();
            let expected = feasible
                .iter()
                .map(|r| (score_route(&q, r, &w), r.id.clone(), r.cost))
                .max_by(|(sa, ida, ca), (sb, idb, cb)| {
                    sa.utility
                        .partial_cmp(&sb.utility)
                        .unwrap()
                        .then(cb.partial_cmp(ca).unwrap())
                        .then(idb.cmp(ida))
                })
                .map(|(_, id, _)| id);

            match select_route(&q, &routes, &w) {
                Ok(d) => assert_eq!(Some(d.chosen.id), expected),
                Err(Error::NoFeasibleRoute) => assert!(expected.is_none()),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    fn text_registry() -> Vec<Route> {
        let mut eff = route("eff", RouteKind::Efficient, BackendTier::OpenSource, 0.05);
        eff.task_affinity.insert(TaskCategory::Coding, 0.95);
        eff.task_affinity.insert(TaskCategory::TextMoe, 0.0);
        let mut prem = route("prem", RouteKind::Premium, BackendTier::Premium, 0.30);
        prem.task_affinity.insert(TaskCategory::TextMoe, 0.0);
        let mut cascade = route("cascade", RouteKind::AgentCascade, BackendTier::OpenSource, 0.03);
        cascade.supported_modalities = Modality::ALL.to_vec();
        cascade.task_affinity.insert(TaskCategory::TextMoe, 0.0);
        let mut moe = route("moe", RouteKind::Efficient, BackendTier::OpenSource, 0.08);
        moe.task_affinity.insert(TaskCategory::TextMoe, 1.0);
        let mut imagegen = route(
            "imagegen",
            RouteKind::ModalityPipeline(Modality::Image),
            BackendTier::Premium,
            1.0,
        );
        imagegen.task_affinity.insert(TaskCategory::ImageGen, 1.0);
        imagegen.task_affinity.insert(TaskCategory::TextMoe, 0.0);
        vec![eff, prem, cascade, moe, imagegen]
    }

    #[test]
    fn simple_coding_query_stays_efficient() {
        let d = route_text(
            &profile(0.30),
            TaskCategory::Coding,
            0.55,
            UserPolicy::default(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "eff");
        assert_eq!(d.rationale, RouteRationale::EfficientPool);
    }

    #[test]
    fn high_score_escalates_to_premium() {
        let d = route_text(
            &profile(0.90),
            TaskCategory::Coding,
            0.55,
            UserPolicy::default(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "prem");
        assert_eq!(d.rationale, RouteRationale::PremiumEscalation);
    }

    #[test]
    fn open_only_substitutes_the_strongest_efficient_route() {
        let d = route_text(
            &profile(0.90),
            TaskCategory::Coding,
            0.55,
            UserPolicy::open_only(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "eff");
        assert_eq!(d.rationale, RouteRationale::PremiumSubstituted);
    }

    #[test]
    fn ambiguous_intent_falls_back_to_the_cascade() {
        let d = route_text(
            &profile(0.40),
            TaskCategory::Ambiguous,
            0.55,
            UserPolicy::default(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "cascade");
        assert_eq!(d.rationale, RouteRationale::CascadeFallback);
    }

    #[test]
    fn image_gen_redirects_to_the_image_pipeline() {
        let d = route_text(
            &profile(0.20),
            TaskCategory::ImageGen,
            0.55,
            UserPolicy::default(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "imagegen");
        assert_eq!(d.rationale, RouteRationale::ImageGenRedirect);
    }

    #[test]
    fn followup_routes_to_the_moe_route() {
        let d = route_text(
            &profile(0.20),
            TaskCategory::TextMoe,
            0.55,
            UserPolicy::default(),
            &text_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "moe");
        assert_eq!(d.rationale, RouteRationale::FollowUpMoe);
    }

    fn nontext_registry() -> Vec<Route> {
        let mut vision = route(
            "pipe-vision",
            RouteKind::ModalityPipeline(Modality::Image),
            BackendTier::OpenSource,
            0.20,
        );
        vision.supported_modalities = vec![Modality::Image];
        vision.task_affinity.insert(TaskCategory::Vision, 0.95);
        vision.task_affinity.insert(TaskCategory::ObjectDetect, 0.60);
        let mut couplet = route("couplet", RouteKind::Couplet, BackendTier::Tool, 0.25);
        couplet.supported_modalities = vec![Modality::Image];
        couplet.task_affinity.insert(TaskCategory::Vision, 0.55);
        couplet.task_affinity.insert(TaskCategory::ObjectDetect, 0.95);
        let mut doc = route(
            "pipe-doc",
            RouteKind::ModalityPipeline(Modality::Document),
            BackendTier::OpenSource,
            0.16,
        );
        doc.supported_modalities = vec![Modality::Document];
        doc.task_affinity.insert(TaskCategory::Document, 0.95);
        let mut cascade = route("cascade", RouteKind::AgentCascade, BackendTier::OpenSource, 0.03);
        cascade.supported_modalities = Modality::ALL.to_vec();
        vec![vision, couplet, doc, cascade]
    }

    #[test]
    fn vision_query_picks_the_higher_scoring_pipeline() {
        let d = route_nontext(
            Modality::Image,
            vec![Modality::Image],
            TaskCategory::Vision,
            UserPolicy::default(),
            &nontext_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "pipe-vision");
        assert_eq!(d.rationale, RouteRationale::ModalityDispatch);
    }

    #[test]
    fn object_detect_prefers_the_couplet_route() {
        let d = route_nontext(
            Modality::Image,
            vec![Modality::Image],
            TaskCategory::ObjectDetect,
            UserPolicy::default(),
            &nontext_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "couplet");
    }

    #[test]
    fn document_plus_question_goes_to_the_document_pipeline() {
        let d = route_nontext(
            Modality::Document,
            vec![Modality::Document],
            TaskCategory::Document,
            UserPolicy::default(),
            &nontext_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "pipe-doc");
    }

    #[test]
    fn multimodal_attachments_force_the_cascade() {
        // No single pipeline supports image plus audio, so S_m = 0
        // everywhere except the cascade; utility comparison forces it.
        let d = route_nontext(
            Modality::Multimodal,
            vec![Modality::Image, Modality::Audio],
            TaskCategory::Complex,
            UserPolicy::default(),
            &nontext_registry(),
            &RoutingWeights::default(),
        )
        .unwrap();
        assert_eq!(d.chosen.id, "cascade");
    }

    #[test]
    fn weights_must_be_normalized_and_ordered() {
        assert!(RoutingWeights::default().validate().is_ok());
        let bad = RoutingWeights { delta_m: 0.2, delta_u: 0.4, delta_t: 0.3, lambda_c: 0.1 };
        assert!(bad.validate().is_err());
        let unnormalized =
            RoutingWeights { delta_m: 0.5, delta_u: 0.4, delta_t: 0.3, lambda_c: 0.1 };
        assert!(unnormalized.validate().is_err());
    }
}
