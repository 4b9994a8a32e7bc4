//! Simulated backend pool, cost ledger, and the remote-gateway adapter.
//!
//! Every backend is a cost/latency/quality profile. Execution is
//! deterministic given (spec, request, seed): success is drawn from the
//! per-category quality with a seeded generator, latency follows the
//! declared model plus seeded jitter, and the ledger records every call
//! atomically. A remote backend satisfies the same result contract, so
//! the planner never cares which kind it talks to.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::{fnv1a64, Modality, TaskCategory};
use crate::{Error, Result};

/// Pricing tier of a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendTier {
    OpenSource,
    Premium,
    Tool,
}

impl BackendTier {
    pub const ALL: [BackendTier; 3] =
        [BackendTier::OpenSource, BackendTier::Premium, BackendTier::Tool];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendTier::OpenSource => "open_source",
            BackendTier::Premium => "premium",
            BackendTier::Tool => "tool",
        }
    }
}

/// Latency simulation: fixed + per-100-input-chars plus seeded jitter
/// drawn uniformly from [0, jitter_ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub fixed_ms: f64,
    pub per_100_chars_ms: f64,
    pub jitter_ms: f64,
}

/// One simulated backend profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub id: String,
    pub tier: BackendTier,
    /// Cost per call in normalized units (one flagship premium call = 1.0).
    pub cost_per_call: f64,
    pub latency: LatencyModel,
    /// Per-category success probability.
    pub quality: BTreeMap<TaskCategory, f64>,
    pub supported_modalities: Vec<Modality>,
    /// When set, calls go over the wire instead of the simulator; the
    /// result contract is identical (latency measured, confidence
    /// defaulted when the peer omits it).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_addr: Option<String>,
}

impl BackendSpec {
    pub fn quality_for(&self, category: TaskCategory) -> f64 {
        self.quality.get(&category).copied().unwrap_or(0.5)
    }

    pub fn supports(&self, modality: Modality) -> bool {
        self.supported_modalities.contains(&modality)
    }
}

/// What the engine sends a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub query_id: String,
    pub category: TaskCategory,
    pub modality: Modality,
    /// Canonical request text (query text, transcript, or derived).
    pub text: String,
    /// Scoped context rendered by the memory layer.
    #[serde(default)]
    pub context: String,
}

impl ExecRequest {
    fn input_chars(&self) -> usize {
        self.text.len() + self.context.len()
    }
}

/// Outcome of one backend call. Cost is charged on success and failure
/// alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResult {
    pub backend_id: String,
    pub payload: String,
    pub success: bool,
    pub cost_charged: f64,
    pub simulated_latency_ms: f64,
    pub confidence: f64,
}

/// SplitMix64: small, fast, stable across platforms and releases. Used
/// for every seeded draw in the simulator so runs replay byte-identically.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Derives a per-call seed from the run seed and stable string parts
/// (query id, backend id, node id), so concurrency and call order cannot
/// perturb any draw.
pub fn derive_seed(run_seed: u64, parts: &[&str]) -> u64 {
    let mut h = run_seed ^ 0x51ed_270b_9f9f_347b;
    for p in parts {
        h = fnv1a64(p.as_bytes(), h ^ 0xcbf2_9ce4_8422_2325);
    }
    h
}

/// One ledger entry. The call log is append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub backend_id: String,
    pub query_id: String,
    pub tier: BackendTier,
    pub cost: f64,
    pub latency_ms: f64,
    pub success: bool,
}

/// Per-tier ledger aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TierAggregate {
    pub calls: usize,
    pub cost: f64,
    /// Queries attributed to this tier via their chosen route's backend.
    pub queries: usize,
}

/// Per-backend ledger aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendAggregate {
    pub tier: BackendTier,
    pub calls: usize,
    pub cost: f64,
}

/// Consistent snapshot of the cost ledger.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub per_backend: BTreeMap<String, BackendAggregate>,
    pub per_tier: BTreeMap<BackendTier, TierAggregate>,
    pub total_calls: usize,
    pub total_cost: f64,
    pub total_queries: usize,
}

impl CostLedger {
    /// Share of total cost carried by `tier`, in percent. Zero when the
    /// ledger is empty.
    pub fn cost_share(&self, tier: BackendTier) -> f64 {
        if self.total_cost == 0.0 {
            return 0.0;
        }
        self.per_tier.get(&tier).map(|t| t.cost).unwrap_or(0.0) / self.total_cost * 100.0
    }

    /// Share of queries attributed to `tier`, in percent.
    pub fn query_share(&self, tier: BackendTier) -> f64 {
        if self.total_queries == 0 {
            return 0.0;
        }
        self.per_tier.get(&tier).map(|t| t.queries).unwrap_or(0) as f64
            / self.total_queries as f64
            * 100.0
    }

    /// Cost share of one backend id, in percent.
    pub fn backend_cost_share(&self, backend_id: &str) -> f64 {
        if self.total_cost == 0.0 {
            return 0.0;
        }
        self.per_backend.get(backend_id).map(|b| b.cost).unwrap_or(0.0) / self.total_cost
            * 100.0
    }
}

/// Pool definition loaded from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub backends: Vec<BackendSpec>,
}

impl PoolConfig {
    /// The bundled simulated pool: cost ratios calibrated so the routed
    /// query and cost shares land near their target splits at desk
    /// scale. Calibrated-to-target, not measured.
    pub fn bundled() -> Self {
        fn quality(pairs: &[(TaskCategory, f64)], default_rest: f64) -> BTreeMap<TaskCategory, f64> {
            let mut q: BTreeMap<TaskCategory, f64> =
                TaskCategory::ALL.iter().map(|c| (*c, default_rest)).collect();
            for (c, v) in pairs {
                q.insert(*c, *v);
            }
            q
        }
        let text = vec![Modality::Text];
        let spec = |id: &str,
                    tier: BackendTier,
                    cost: f64,
                    fixed: f64,
                    per100: f64,
                    jitter: f64,
                    quality: BTreeMap<TaskCategory, f64>,
                    modalities: Vec<Modality>| BackendSpec {
            id: id.to_string(),
            tier,
            cost_per_call: cost,
            latency: LatencyModel { fixed_ms: fixed, per_100_chars_ms: per100, jitter_ms: jitter },
            quality,
            supported_modalities: modalities,
            remote_addr: None,
        };
        use BackendTier::*;
        use TaskCategory::*;
        Self {
            backends: vec![
                spec("open-chat", OpenSource, 0.05, 150.0, 2.0, 40.0,
                    quality(&[(General, 0.97), (SummarizationWriting, 0.90), (Ambiguous, 0.90)], 0.70), text.clone()),
                spec("open-code", OpenSource, 0.05, 160.0, 2.0, 40.0,
                    quality(&[(Coding, 0.97)], 0.60), text.clone()),
                spec("open-math", OpenSource, 0.05, 160.0, 2.0, 40.0,
                    quality(&[(Math, 0.97)], 0.60), text.clone()),
                spec("open-write", OpenSource, 0.05, 150.0, 2.0, 40.0,
                    quality(&[(SummarizationWriting, 0.97)], 0.60), text.clone()),
                spec("open-moe", OpenSource, 0.08, 210.0, 2.0, 40.0,
                    quality(&[(TextMoe, 0.97), (General, 0.85)], 0.65), text.clone()),
                spec("planner-slm", OpenSource, 0.03, 60.0, 1.0, 10.0,
                    quality(&[(Complex, 0.98), (Ambiguous, 0.98)], 0.90), Modality::ALL.to_vec()),
                spec("open-vision", OpenSource, 0.20, 320.0, 1.0, 60.0,
                    quality(&[(Vision, 0.96), (ObjectDetect, 0.75)], 0.55),
                    vec![Modality::Image, Modality::Text]),
                spec("open-doc", OpenSource, 0.16, 300.0, 1.5, 60.0,
                    quality(&[(Document, 0.96)], 0.55),
                    vec![Modality::Document, Modality::Text]),
                spec("open-asr", OpenSource, 0.14, 280.0, 1.0, 60.0,
                    quality(&[(Audio, 0.96)], 0.55),
                    vec![Modality::Audio, Modality::Text]),
                spec("open-video", OpenSource, 0.26, 430.0, 1.0, 80.0,
                    quality(&[(Video, 0.90)], 0.50),
                    vec![Modality::Video, Modality::Text]),
                spec("open-imagegen", OpenSource, 0.20, 780.0, 1.0, 90.0,
                    quality(&[(ImageGen, 0.82)], 0.40),
                    vec![Modality::Text, Modality::Image]),
                spec("premium-core", Premium, 0.30, 360.0, 3.0, 60.0,
                    quality(&[(Math, 0.97), (Coding, 0.97), (SummarizationWriting, 0.97),
                              (General, 0.97), (Complex, 0.97), (Ambiguous, 0.95)], 0.90), text.clone()),
                spec("premium-video", Premium, 0.60, 470.0, 1.5, 70.0,
                    quality(&[(Video, 0.97)], 0.75),
                    vec![Modality::Video, Modality::Text]),
                spec("premium-imagegen", Premium, 1.00, 880.0, 1.0, 90.0,
                    quality(&[(ImageGen, 0.98)], 0.60),
                    vec![Modality::Text, Modality::Image]),
                spec("flagship", Premium, 1.00, 520.0, 3.0, 80.0,
                    quality(&[], 0.98), Modality::ALL.to_vec()),
                spec("tool-detector", Tool, 0.25, 180.0, 0.5, 20.0,
                    quality(&[(ObjectDetect, 1.0)], 1.0), vec![Modality::Image]),
                spec("tool-ocr", Tool, 0.22, 200.0, 0.5, 20.0,
                    quality(&[], 1.0), vec![Modality::Image, Modality::Document]),
                spec("tool-tagger", Tool, 0.20, 160.0, 0.5, 20.0,
                    quality(&[], 1.0), vec![Modality::Image]),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut open_max = 0.0f64;
        for b in &self.backends {
            if b.cost_per_call < 0.0 {
                return Err(Error::InvalidConfig(format!("backend {} has negative cost", b.id)));
            }
            for (cat, q) in &b.quality {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::InvalidConfig(format!(
                        "backend {} quality for {cat} out of [0,1]: {q}",
                        b.id
                    )));
                }
            }
            if b.tier == BackendTier::OpenSource {
                open_max = open_max.max(b.cost_per_call);
            }
        }
        for b in &self.backends {
            if b.tier == BackendTier::Premium && b.cost_per_call < open_max {
                return Err(Error::InvalidConfig(format!(
                    "premium backend {} costs {} below the open-tier maximum {}",
                    b.id, b.cost_per_call, open_max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
struct LedgerInner {
    calls: Vec<CallRecord>,
    query_tiers: Vec<(String, BackendTier)>,
}

/// Uniform execution interface over the registered backends plus the
/// append-only cost ledger.
#[derive(Debug)]
pub struct BackendPool {
    specs: BTreeMap<String, BackendSpec>,
    ledger: Mutex<LedgerInner>,
}

impl BackendPool {
    pub fn new(config: PoolConfig) -> Result<Self> {
        config.validate()?;
        let specs = config.backends.into_iter().map(|b| (b.id.clone(), b)).collect();
        Ok(Self { specs, ledger: Mutex::new(LedgerInner::default()) })
    }

    pub fn spec(&self, backend_id: &str) -> Result<&BackendSpec> {
        self.specs
            .get(backend_id)
            .ok_or_else(|| Error::UnknownBackend(backend_id.to_string()))
    }

    pub fn backends(&self) -> impl Iterator<Item = &BackendSpec> {
        self.specs.values()
    }

    /// Cheapest cost among backends of `tier`; used as that tier's
    /// representative cost in threshold calibration.
    pub fn min_tier_cost(&self, tier: BackendTier) -> f64 {
        self.specs
            .values()
            .filter(|b| b.tier == tier)
            .map(|b| b.cost_per_call)
            .fold(f64::INFINITY, f64::min)
    }

    /// Executes one call. Deterministic for fixed (spec, request, seed).
    pub fn execute(&self, backend_id: &str, req: &ExecRequest, seed: u64) -> Result<BackendResult> {
        let spec = self.spec(backend_id)?;
        let result = if spec.remote_addr.is_some() {
            execute_remote(spec, req)?
        } else {
            simulate(spec, req, seed)
        };
        let mut ledger = self.ledger.lock().expect("ledger poisoned");
        ledger.calls.push(CallRecord {
            backend_id: spec.id.clone(),
            query_id: req.query_id.clone(),
            tier: spec.tier,
            cost: result.cost_charged,
            latency_ms: result.simulated_latency_ms,
            success: result.success,
        });
        Ok(result)
    }

    /// Attributes one whole query to the tier of its chosen route's
    /// backend; feeds the per-tier query-share report.
    pub fn note_query(&self, query_id: &str, tier: BackendTier) {
        let mut ledger = self.ledger.lock().expect("ledger poisoned");
        ledger.query_tiers.push((query_id.to_string(), tier));
    }

    /// Total cost charged so far for one query id.
    pub fn query_cost(&self, query_id: &str) -> f64 {
        let ledger = self.ledger.lock().expect("ledger poisoned");
        ledger.calls.iter().filter(|c| c.query_id == query_id).map(|c| c.cost).sum()
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.ledger.lock().expect("ledger poisoned").calls.clone()
    }

    /// Consistent aggregate snapshot of calls, costs, and query tiers.
    pub fn ledger_report(&self) -> CostLedger {
        let ledger = self.ledger.lock().expect("ledger poisoned");
        let mut report = CostLedger::default();
        for call in &ledger.calls {
            let agg = report
                .per_backend
                .entry(call.backend_id.clone())
                .or_insert_with(|| BackendAggregate { tier: call.tier, calls: 0, cost: 0.0 });
            agg.calls += 1;
            agg.cost += call.cost;
            let tier = report.per_tier.entry(call.tier).or_default();
            tier.calls += 1;
            tier.cost += call.cost;
            report.total_calls += 1;
            report.total_cost += call.cost;
        }
        for (_, tier) in &ledger.query_tiers {
            report.per_tier.entry(*tier).or_default().queries += 1;
            report.total_queries += 1;
        }
        report
    }
}

fn simulate(spec: &BackendSpec, req: &ExecRequest, seed: u64) -> BackendResult {
    let mut rng = SplitMix64::new(seed);
    let quality = spec.quality_for(req.category);
    let success = rng.next_f64() < quality;
    let jitter = rng.next_f64() * spec.latency.jitter_ms;
    let latency = spec.latency.fixed_ms
        + spec.latency.per_100_chars_ms * (req.input_chars() as f64 / 100.0)
        + jitter;
    let confidence = (quality + (rng.next_f64() - 0.5) * 0.1).clamp(0.0, 1.0);
    // Simulated answers echo the canonical request under a category tag,
    // so answers to one query agree across backends unless a draw fails.
    let payload = if success {
        format!("{} response: {}", req.category, req.text)
    } else {
        format!("{} response: unable to complete the request", req.category)
    };
    BackendResult {
        backend_id: spec.id.clone(),
        payload,
        success,
        cost_charged: spec.cost_per_call,
        simulated_latency_ms: latency,
        confidence,
    }
}

#[derive(Debug, Deserialize)]
struct RemoteReply {
    payload: String,
    #[serde(default = "default_true")]
    success: bool,
    confidence: Option<f64>,
}

fn default_true() -> bool {
    true
}

/// Minimal HTTP-style exchange with a remote peer: one POST, one JSON
/// body each way. Latency is measured, confidence defaults to 0.5 when
/// the peer omits it, and the configured per-call cost is charged.
fn execute_remote(spec: &BackendSpec, req: &ExecRequest) -> Result<BackendResult> {
    let addr = spec.remote_addr.as_deref().expect("checked by caller");
    let started = std::time::Instant::now();
    let body = serde_json::to_string(req)?;
    let mut stream = std::net::TcpStream::connect(addr)?;
    write!(
        stream,
        "POST /execute HTTP/1.0\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{}",
        body.len(),
        body
    )?;
    stream.flush()?;
    // Half-close so the peer sees a complete request before replying.
    stream.shutdown(std::net::Shutdown::Write)?;
    let mut response = String::new();
    stream.read_to_string(&mut response)?;
    let json = response
        .split_once("\r\n\r\n")
        .map(|(_, b)| b)
        .unwrap_or(response.as_str());
    let reply: RemoteReply = serde_json::from_str(json.trim())?;
    Ok(BackendResult {
        backend_id: spec.id.clone(),
        payload: reply.payload,
        success: reply.success,
        cost_charged: spec.cost_per_call,
        simulated_latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        confidence: reply.confidence.unwrap_or(0.5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(category: TaskCategory) -> ExecRequest {
        ExecRequest {
            query_id: "q1".into(),
            category,
            modality: Modality::Text,
            text: "hello world".into(),
            context: String::new(),
        }
    }

    fn pool_with_quality(q: f64) -> BackendPool {
        let mut quality = BTreeMap::new();
        quality.insert(TaskCategory::General, q);
        BackendPool::new(PoolConfig {
            backends: vec![BackendSpec {
                id: "b".into(),
                tier: BackendTier::OpenSource,
                cost_per_call: 0.1,
                latency: LatencyModel { fixed_ms: 100.0, per_100_chars_ms: 1.0, jitter_ms: 10.0 },
                quality,
                supported_modalities: vec![Modality::Text],
                remote_addr: None,
            }],
        })
        .unwrap()
    }

    #[test]
    fn bundled_pool_validates() {
        PoolConfig::bundled().validate().unwrap();
        let pool = BackendPool::new(PoolConfig::bundled()).unwrap();
        assert!(pool.min_tier_cost(BackendTier::OpenSource) <= 0.05);
        assert_eq!(pool.min_tier_cost(BackendTier::Premium), 0.30);
    }

    #[test]
    fn perfect_quality_always_succeeds() {
        let pool = pool_with_quality(1.0);
        for seed in 0..200 {
            let r = pool.execute("b", &request(TaskCategory::General), seed).unwrap();
            assert!(r.success);
        }
    }

    #[test]
    fn zero_quality_never_succeeds() {
        let pool = pool_with_quality(0.0);
        for seed in 0..200 {
            let r = pool.execute("b", &request(TaskCategory::General), seed).unwrap();
            assert!(!r.success);
        }
    }

    #[test]
    fn success_rate_tracks_quality_over_many_draws() {
        let pool = pool_with_quality(0.8);
        let mut successes = 0usize;
        let n = 10_000;
        for i in 0..n {
            let seed = derive_seed(42, &[&format!("q{i}"), "b"]);
            let r = pool.execute("b", &request(TaskCategory::General), seed).unwrap();
            if r.success {
                successes += 1;
            }
        }
        let rate = successes as f64 / n as f64;
        assert!((rate - 0.8).abs() <= 0.01, "rate {rate}");
    }

    #[test]
    fn unknown_backend_is_an_error() {
        let pool = pool_with_quality(1.0);
        assert!(matches!(
            pool.execute("ghost", &request(TaskCategory::General), 0),
            Err(Error::UnknownBackend(_))
        ));
    }

    #[test]
    fn execution_is_deterministic_for_fixed_seed() {
        let pool = pool_with_quality(0.7);
        let a = pool.execute("b", &request(TaskCategory::General), 99).unwrap();
        let b = pool.execute("b", &request(TaskCategory::General), 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cost_is_charged_on_failure_too() {
        let pool = pool_with_quality(0.0);
        let r = pool.execute("b", &request(TaskCategory::General), 0).unwrap();
        assert!(!r.success);
        assert_eq!(r.cost_charged, 0.1);
    }

    #[test]
    fn empty_ledger_reports_zeros() {
        let pool = pool_with_quality(1.0);
        let report = pool.ledger_report();
        assert_eq!(report.total_calls, 0);
        assert_eq!(report.total_cost, 0.0);
        assert_eq!(report.cost_share(BackendTier::OpenSource), 0.0);
    }

    #[test]
    fn bundled_split_gives_thirty_percent_open_cost_share() {
        // 72 open calls at 0.05 plus 28 premium calls at 0.30:
        // 3.6 / (3.6 + 8.4) = 30%.
        let pool = BackendPool::new(PoolConfig::bundled()).unwrap();
        for i in 0..72 {
            let mut req = request(TaskCategory::General);
            req.query_id = format!("open-{i}");
            pool.execute("open-chat", &req, i).unwrap();
            pool.note_query(&req.query_id, BackendTier::OpenSource);
        }
        for i in 0..28 {
            let mut req = request(TaskCategory::General);
            req.query_id = format!("prem-{i}");
            pool.execute("premium-core", &req, i).unwrap();
            pool.note_query(&req.query_id, BackendTier::Premium);
        }
        let report = pool.ledger_report();
        assert!((report.cost_share(BackendTier::OpenSource) - 30.0).abs() < 1e-9);
        assert!((report.cost_share(BackendTier::Premium) - 70.0).abs() < 1e-9);
        assert!((report.query_share(BackendTier::OpenSource) - 72.0).abs() < 1e-9);
    }

    #[test]
    fn snapshot_totals_equal_call_log_replay() {
        let pool = BackendPool::new(PoolConfig::bundled()).unwrap();
        for i in 0..40 {
            let id = if i % 3 == 0 { "premium-core" } else { "open-chat" };
            let mut req = request(TaskCategory::General);
            req.query_id = format!("q{i}");
            pool.execute(id, &req, i).unwrap();
        }
        let report = pool.ledger_report();
        let log = pool.call_log();
        let replayed: f64 = log.iter().map(|c| c.cost).sum();
        assert!((report.total_cost - replayed).abs() < 1e-12);
        assert_eq!(report.total_calls, log.len());
        let per_backend: f64 = report.per_backend.values().map(|b| b.cost).sum();
        assert!((report.total_cost - per_backend).abs() < 1e-12);
    }

    #[test]
    fn remote_backend_satisfies_the_result_contract() {
        use std::net::TcpListener;
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut text = String::new();
            stream.read_to_string(&mut text).unwrap();
            assert!(text.starts_with("POST /execute"));
            let body = r#"{"payload": "remote says hi"}"#;
            let reply = format!(
                "HTTP/1.0 200 OK\r\nContent-Length: {}\r\n\r\n{}",
                body.len(),
                body
            );
            stream.write_all(reply.as_bytes()).unwrap();
            stream.flush().unwrap();
        });

        let mut quality = BTreeMap::new();
        quality.insert(TaskCategory::General, 1.0);
        let pool = BackendPool::new(PoolConfig {
            backends: vec![BackendSpec {
                id: "remote".into(),
                tier: BackendTier::Tool,
                cost_per_call: 0.4,
                latency: LatencyModel { fixed_ms: 0.0, per_100_chars_ms: 0.0, jitter_ms: 0.0 },
                quality,
                supported_modalities: vec![Modality::Text],
                remote_addr: Some(addr.to_string()),
            }],
        })
        .unwrap();

        let r = pool.execute("remote", &request(TaskCategory::General), 0).unwrap();
        server.join().unwrap();
        assert_eq!(r.payload, "remote says hi");
        assert!(r.success);
        assert_eq!(r.confidence, 0.5);
        assert_eq!(r.cost_charged, 0.4);
        assert!(r.simulated_latency_ms >= 0.0);
        assert_eq!(pool.ledger_report().total_calls, 1);
    }
}
