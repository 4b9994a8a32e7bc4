//! Engine configuration: every module's tables, dictionaries, weights,
//! thresholds, the route registry, the backend pool, and the run seed,
//! with bundled defaults and full cross-reference validation.
//!
//! The bundled registry pairs each route with a bundled-pool backend;
//! affinities and costs are calibrated so the routed query and cost
//! shares land near their target splits on the bundled corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendTier, PoolConfig};
use crate::complexity::{ComplexityParams, KeywordDictionary};
use crate::graph::FusionCoefficients;
use crate::intake::IntakeTables;
use crate::intent::IntentParams;
use crate::memory::MemoryParams;
use crate::model::{Modality, TaskCategory};
use crate::planner::{Route, RouteKind, RoutingWeights};
use crate::{Error, Result};

/// Harness-level knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Simulated concurrency width for throughput accounting.
    pub concurrency_width: usize,
    /// Documented calibration expectation for the high-similarity
    /// fraction of routed answers against premium references.
    pub expected_similarity_fraction: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self { concurrency_width: 8, expected_similarity_fraction: 0.90 }
    }
}

/// Full engine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub intake: IntakeTables,
    pub keywords: KeywordDictionary,
    pub complexity: ComplexityParams,
    pub intent: IntentParams,
    /// Centroid exemplars, at least eight per category in the bundle.
    pub exemplars: BTreeMap<TaskCategory, Vec<String>>,
    pub routing: RoutingWeights,
    pub routes: Vec<Route>,
    pub pool: PoolConfig,
    pub memory: MemoryParams,
    pub fusion: FusionCoefficients,
    pub eval: EvalParams,
    pub run_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::bundled()
    }
}

impl EngineConfig {
    pub fn bundled() -> Self {
        Self {
            intake: IntakeTables::bundled(),
            keywords: KeywordDictionary::bundled(),
            complexity: ComplexityParams::default(),
            intent: IntentParams::default(),
            exemplars: bundled_exemplars(),
            routing: RoutingWeights::default(),
            routes: bundled_routes(),
            pool: PoolConfig::bundled(),
            memory: MemoryParams::default(),
            fusion: FusionCoefficients::default(),
            eval: EvalParams::default(),
            run_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intake.validate()?;
        self.keywords.validate()?;
        self.complexity.weights.validate()?;
        if !(0.0..=1.0).contains(&self.complexity.tau) {
            return Err(Error::InvalidConfig(format!(
                "tau must be in [0,1], got {}",
                self.complexity.tau
            )));
        }
        self.routing.validate()?;
        self.pool.validate()?;
        self.memory.validate()?;
        self.fusion.validate()?;

        let backend_tiers: BTreeMap<&str, BackendTier> =
            self.pool.backends.iter().map(|b| (b.id.as_str(), b.tier)).collect();
        for route in &self.routes {
            let Some(&tier) = backend_tiers.get(route.backend_id.as_str()) else {
                return Err(Error::InvalidConfig(format!(
                    "route `{}` references unknown backend `{}`",
                    route.id, route.backend_id
                )));
            };
            if tier != route.tier {
                return Err(Error::InvalidConfig(format!(
                    "route `{}` declares tier {:?} but backend `{}` is {:?}",
                    route.id, route.tier, route.backend_id, tier
                )));
            }
            if route.kind == RouteKind::Efficient && route.tier != BackendTier::OpenSource {
                return Err(Error::InvalidConfig(format!(
                    "efficient route `{}` must reference an open-tier backend",
                    route.id
                )));
            }
            if route.cost < 0.0 {
                return Err(Error::InvalidConfig(format!("route `{}` has negative cost", route.id)));
            }
            for (category, affinity) in &route.task_affinity {
                if !(0.0..=1.0).contains(affinity) {
                    return Err(Error::InvalidConfig(format!(
                        "route `{}` affinity for {category} out of [0,1]",
                        route.id
                    )));
                }
            }
            if route.supported_modalities.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "route `{}` supports no modalities",
                    route.id
                )));
            }
        }
        for category in TaskCategory::ALL {
            let count = self.exemplars.get(&category).map(Vec::len).unwrap_or(0);
            if count == 0 {
                return Err(Error::InvalidConfig(format!(
                    "no centroid exemplars for {category}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(raw)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// The bundled route registry over the bundled pool.
pub fn bundled_routes() -> Vec<Route> {
    use Modality as M;
    use TaskCategory::{
        Ambiguous, Coding, Complex, General, ImageGen, Math, ObjectDetect,
        SummarizationWriting, TextMoe,
    };
    let route = |id: &str,
                 kind: RouteKind,
                 backend_id: &str,
                 tier: BackendTier,
                 modalities: &[Modality],
                 affinity: &[(TaskCategory, f64)],
                 cost: f64| Route {
        id: id.to_string(),
        kind,
        backend_id: backend_id.to_string(),
        tier,
        supported_modalities: modalities.to_vec(),
        task_affinity: affinity.iter().copied().collect(),
        cost,
    };
    vec![
        route("eff-chat", RouteKind::Efficient, "open-chat", BackendTier::OpenSource, &[M::Text],
            &[(General, 0.92), (SummarizationWriting, 0.70), (Ambiguous, 0.50), (Math, 0.35), (Coding, 0.35)], 0.05),
        route("eff-code", RouteKind::Efficient, "open-code", BackendTier::OpenSource, &[M::Text],
            &[(Coding, 0.95), (General, 0.40)], 0.05),
        route("eff-math", RouteKind::Efficient, "open-math", BackendTier::OpenSource, &[M::Text],
            &[(Math, 0.95), (General, 0.40)], 0.05),
        route("eff-write", RouteKind::Efficient, "open-write", BackendTier::OpenSource, &[M::Text],
            &[(SummarizationWriting, 0.95), (General, 0.45)], 0.05),
        route("moe-followup", RouteKind::Efficient, "open-moe", BackendTier::OpenSource, &[M::Text],
            &[(TextMoe, 1.00), (General, 0.40)], 0.08),
        route("premium-text", RouteKind::Premium, "premium-core", BackendTier::Premium, &[M::Text],
            &[(Math, 0.97), (Coding, 0.97), (SummarizationWriting, 0.97), (General, 0.97),
              (Complex, 0.95), (Ambiguous, 0.90)], 0.30),
        route("flagship-direct", RouteKind::Premium, "flagship", BackendTier::Premium,
            &[M::Text, M::Image, M::Audio, M::Video, M::Document, M::Multimodal],
            &[(Math, 0.85), (Coding, 0.85), (SummarizationWriting, 0.85), (General, 0.85),
              (TaskCategory::Vision, 0.85), (TaskCategory::Document, 0.85), (ImageGen, 0.85), (TaskCategory::Audio, 0.85), (TaskCategory::Video, 0.85),
              (TextMoe, 0.85), (ObjectDetect, 0.85), (Complex, 0.85), (Ambiguous, 0.85)], 1.00),
        route("cascade", RouteKind::AgentCascade, "planner-slm", BackendTier::OpenSource,
            &[M::Text, M::Image, M::Audio, M::Video, M::Document, M::Multimodal],
            &[(Complex, 0.95), (Ambiguous, 0.90)], 0.03),
        route("pipe-vision", RouteKind::ModalityPipeline(M::Image), "open-vision",
            BackendTier::OpenSource, &[M::Image, M::Text, M::Multimodal],
            &[(TaskCategory::Vision, 0.95), (ObjectDetect, 0.60)], 0.20),
        route("couplet-vision", RouteKind::Couplet, "tool-detector", BackendTier::Tool,
            &[M::Image, M::Text, M::Multimodal],
            &[(ObjectDetect, 0.95), (TaskCategory::Vision, 0.55)], 0.25),
        route("pipe-document", RouteKind::ModalityPipeline(M::Document), "open-doc",
            BackendTier::OpenSource, &[M::Document, M::Text, M::Multimodal],
            &[(TaskCategory::Document, 0.95)], 0.16),
        route("pipe-audio", RouteKind::ModalityPipeline(M::Audio), "open-asr",
            BackendTier::OpenSource, &[M::Audio, M::Text, M::Multimodal],
            &[(TaskCategory::Audio, 0.95)], 0.14),
        route("pipe-video", RouteKind::ModalityPipeline(M::Video), "premium-video",
            BackendTier::Premium, &[M::Video, M::Text, M::Multimodal],
            &[(TaskCategory::Video, 0.95)], 0.60),
        route("pipe-video-open", RouteKind::ModalityPipeline(M::Video), "open-video",
            BackendTier::OpenSource, &[M::Video, M::Text, M::Multimodal],
            &[(TaskCategory::Video, 0.70)], 0.26),
        route("pipe-imagegen", RouteKind::ModalityPipeline(M::Image), "premium-imagegen",
            BackendTier::Premium, &[M::Text],
            &[(ImageGen, 1.00)], 1.00),
        route("pipe-imagegen-open", RouteKind::ModalityPipeline(M::Image), "open-imagegen",
            BackendTier::OpenSource, &[M::Text],
            &[(ImageGen, 0.50)], 0.20),
    ]
}

/// Bundled centroid exemplars, eight per category, phrased unlike the
/// keyword dictionaries so the centroid stage carries weight of its own.
pub fn bundled_exemplars() -> BTreeMap<TaskCategory, Vec<String>> {
    let mut exemplars = BTreeMap::new();
    let texts = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<Vec<String>>();
    exemplars.insert(
        TaskCategory::Math,
        texts(&[
            "find the roots of the quadratic",
            "what is the area under the curve",
            "evaluate the limit as x approaches zero",
            "factor the polynomial expression",
            "how many primes are below one hundred",
            "find the slope of the tangent line",
            "balance both sides of the identity",
            "work out the sum of the series",
        ]),
    );
    exemplars.insert(
        TaskCategory::Coding,
        texts(&[
            "fix the bug in my loop",
            "why does my program crash on startup",
            "optimize this sorting routine",
            "write a parser for log lines",
            "convert this snippet to another language",
            "my test suite fails intermittently",
            "add error handling to the endpoint",
            "profile the slow query handler",
        ]),
    );
    exemplars.insert(
        TaskCategory::SummarizationWriting,
        texts(&[
            "give me a short abstract of the passage",
            "tighten this paragraph",
            "make this email more polite",
            "turn these notes into prose",
            "give the key points of the memo",
            "reword the conclusion",
            "compress this chapter into bullets",
            "polish the introduction",
        ]),
    );
    exemplars.insert(
        TaskCategory::Vision,
        texts(&[
            "what objects appear in the photo",
            "describe the scene in the picture",
            "is there a dog in this image",
            "what color is the car in the photo",
            "read the sign in the picture",
            "how crowded is the scene",
            "what landmark is shown",
            "describe the lighting of the shot",
        ]),
    );
    exemplars.insert(
        TaskCategory::Document,
        texts(&[
            "what does the contract say about termination",
            "find the invoice total",
            "which clause covers liability",
            "list the fields in the form",
            "what is the due date on the bill",
            "quote the relevant paragraph",
            "who signed the agreement",
            "extract the table of figures",
        ]),
    );
    exemplars.insert(
        TaskCategory::ImageGen,
        texts(&[
            "a watercolor of a lighthouse at dawn",
            "a futuristic city skyline at night",
            "a cozy cabin in snowy woods",
            "a dragon reading a newspaper",
            "minimalist poster of a mountain",
            "portrait of a robot gardener",
            "isometric art of a tiny kitchen",
            "stained glass pattern of a fox",
        ]),
    );
    exemplars.insert(
        TaskCategory::Audio,
        texts(&[
            "what did the speaker say in the recording",
            "turn the voice memo into text",
            "list the action items from the call",
            "who spoke first in the meeting audio",
            "write down the lyrics from the clip",
            "clean up the interview transcript",
            "what language is spoken in the recording",
            "note the timestamps of each topic",
        ]),
    );
    exemplars.insert(
        TaskCategory::Video,
        texts(&[
            "summarize the key content of the clip",
            "what happens in the first scene",
            "describe the action in the footage",
            "when does the speaker appear on screen",
            "list the scenes of the video",
            "what product is shown in the ad",
            "how does the tutorial end",
            "track the ball across the frames",
        ]),
    );
    exemplars.insert(
        TaskCategory::TextMoe,
        texts(&[
            "tell me more about it",
            "what about the one before",
            "can you expand on that",
            "and the second one",
            "what color was it",
            "repeat that more slowly",
            "how does that compare",
            "why did it look that way",
        ]),
    );
    exemplars.insert(
        TaskCategory::ObjectDetect,
        texts(&[
            "count the cars in the parking lot",
            "find all faces in the crowd",
            "how many bottles are on the shelf",
            "locate every traffic sign",
            "mark the animals in the frame",
            "how many people are wearing hats",
            "find the defects on the board",
            "spot all the logos",
        ]),
    );
    exemplars.insert(
        TaskCategory::Complex,
        texts(&[
            "translate the memo and graph the numbers",
            "clean the data and fit a model and report",
            "transcribe the call and draft a reply",
            "scan the receipt and total the amounts",
            "read the article and code the method",
            "outline the book and write a quiz",
            "parse the logs and plot the errors",
            "extract the table and chart the trend",
        ]),
    );
    exemplars.insert(
        TaskCategory::Ambiguous,
        texts(&[
            "help me with this",
            "make it better",
            "sort this out please",
            "can you handle it",
            "do the usual",
            "fix the thing",
            "improve it somehow",
            "you know what i need",
        ]),
    );
    exemplars.insert(
        TaskCategory::General,
        texts(&[
            "what is the capital of france",
            "why is the sky blue",
            "who invented the telephone",
            "how do magnets work",
            "what causes the seasons",
            "when did the roman empire fall",
            "how far away is the moon",
            "what do bees eat",
        ]),
    );
    exemplars
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_validates() {
        EngineConfig::bundled().validate().unwrap();
    }

    #[test]
    fn bundled_config_round_trips_through_json() {
        let config = EngineConfig::bundled();
        let json = config.to_json_pretty().unwrap();
        let back = EngineConfig::from_json(&json).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn route_to_unknown_backend_is_rejected() {
        let mut config = EngineConfig::bundled();
        config.routes[0].backend_id = "ghost".into();
        assert!(config.validate().is_err());
    }

    #[test]
    fn tier_mismatch_is_rejected() {
        let mut config = EngineConfig::bundled();
        config.routes[0].backend_id = "premium-core".into();
        assert!(config.validate().is_err());
    }

    #[test]
    fn exemplars_cover_every_category() {
        let exemplars = bundled_exemplars();
        assert_eq!(exemplars.len(), 13);
        for (_, texts) in exemplars {
            assert!(texts.len() >= 8);
        }
    }

    #[test]
    fn exactly_one_followup_route_in_the_bundle() {
        let routes = bundled_routes();
        let followup: Vec<&Route> = routes
            .iter()
            .filter(|r| r.affinity(TaskCategory::TextMoe) >= crate::planner::FOLLOWUP_AFFINITY_FLOOR)
            .collect();
        assert_eq!(followup.len(), 1);
        assert_eq!(followup[0].id, "moe-followup");
    }
}
