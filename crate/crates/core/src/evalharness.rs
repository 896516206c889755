//! Dual-task evaluation of protectors against a target answerer, with report
//! tables, figures and the ε sweep.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GeneratorCheckpoint;
use crate::imageio::encode_png;
use crate::metrics::{Embedder, MetricsRecord, COLUMN_NAMES};
use crate::plot;
use crate::protector::{GeneratorProtector, ProbeConfig, Protector, QaLabels, Unprotected};
use crate::qa::QaKind;
use crate::surrogate::{decode_answer, SurrogateModel, MAX_ANSWER_TOKENS};
use crate::tensor::Image;
use crate::training::LabeledSample;

/// Extraction prompt sent to targets that accept free-form questions.
pub const PRIVACY_PROMPT_V1: &str = "List any personal information visible in this screenshot.";
pub const PRIVACY_PROMPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    LocalToy,
    RemoteApi,
}

/// Why a query produced no answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum AnswerFailure {
    #[error("configuration: {0}")]
    Config(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("rate limited after retries")]
    RateLimited,
    #[error("HTTP status {0}")]
    Http(u16),
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("unsupported prompt: {0}")]
    Unsupported(String),
}

impl AnswerFailure {
    fn retryable(&self) -> bool {
        matches!(
            self,
            AnswerFailure::Timeout(_) | AnswerFailure::RateLimited | AnswerFailure::Transport(_)
        ) || matches!(self, AnswerFailure::Http(s) if *s >= 500)
    }
}

/// A model that answers a question about an image. Failures are values, not panics.
pub trait TargetAnswerer: Send + Sync {
    fn id(&self) -> String;
    fn kind(&self) -> TargetKind;
    fn answer(&self, image: &Image, prompt: &str) -> std::result::Result<String, AnswerFailure>;
}

/// Greedy decoding by a local surrogate.
pub struct LocalTarget {
    model: Arc<dyn SurrogateModel>,
    max_tokens: usize,
}

impl LocalTarget {
    pub fn new(model: Arc<dyn SurrogateModel>) -> Self {
        Self {
            model,
            max_tokens: MAX_ANSWER_TOKENS,
        }
    }
}

impl TargetAnswerer for LocalTarget {
    fn id(&self) -> String {
        self.model.id().to_string()
    }

    fn kind(&self) -> TargetKind {
        TargetKind::LocalToy
    }

    fn answer(&self, image: &Image, prompt: &str) -> std::result::Result<String, AnswerFailure> {
        decode_answer(self.model.as_ref(), image, prompt, self.max_tokens).map_err(|e| match e {
            Error::UnsupportedQuestion { .. } => AnswerFailure::Unsupported(e.to_string()),
            other => AnswerFailure::Malformed(other.to_string()),
        })
    }
}

/// Chat-completions style endpoint; the key is read from an environment variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_max_tokens() -> u32 {
    256
}

impl EndpointConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Reply text and how many retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub text: String,
    pub retries: u32,
}

pub struct RemoteTarget {
    config: EndpointConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl RemoteTarget {
    /// Fails immediately if the credential variable is unset.
    pub fn new(config: EndpointConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            Error::Config(format!(
                "environment variable {} with the API key is not set",
                config.api_key_env
            ))
        })?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build();
        Ok(Self {
            config,
            api_key,
            agent,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> std::result::Result<String, AnswerFailure> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body.clone());
        match resp {
            Ok(r) => {
                let v: serde_json::Value = r
                    .into_json()
                    .map_err(|e| AnswerFailure::Malformed(e.to_string()))?;
                extract_reply(&v)
            }
            Err(ureq::Error::Status(code, _)) => Err(match code {
                401 | 403 => AnswerFailure::Auth(code),
                429 => AnswerFailure::RateLimited,
                c => AnswerFailure::Http(c),
            }),
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                let timed_out = std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .is_some_and(|io| {
                        matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock)
                    })
                    || msg.contains("timed out");
                Err(if timed_out {
                    AnswerFailure::Timeout(msg)
                } else {
                    AnswerFailure::Transport(msg)
                })
            }
        }
    }

    /// Sends one image and prompt, retrying transient failures with
    /// exponential backoff.
    pub fn query(&self, image: &Image, prompt: &str) -> std::result::Result<QueryOutcome, AnswerFailure> {
        let png = encode_png(image).map_err(|e| AnswerFailure::Config(e.to_string()))?;
        let data_url = format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(png)
        );
        let body = serde_json::json!({
            "model": self.config.model,
            "max_tokens": self.config.max_tokens,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": data_url}}
                ]
            }]
        });
        let mut retries = 0;
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        loop {
            log::debug!(
                "POST {} model={} prompt={prompt:?} authorization=Bearer [redacted]",
                self.config.base_url,
                self.config.model
            );
            match self.attempt(&body) {
                Ok(text) => {
                    log::debug!("reply after {retries} retries: {text:?}");
                    return Ok(QueryOutcome { text, retries });
                }
                Err(e) if e.retryable() && retries < self.config.max_retries => {
                    retries += 1;
                    log::warn!("retry {retries} after {e}; waiting {backoff:?}");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
                Err(e) => {
                    log::warn!("query failed after {retries} retries: {e}");
                    return Err(e);
                }
            }
        }
    }
}

fn extract_reply(v: &serde_json::Value) -> std::result::Result<String, AnswerFailure> {
    let content = v
        .pointer("/choices/0/message/content")
        .ok_or_else(|| AnswerFailure::Malformed("no choices[0].message.content".into()))?;
    match content {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(|t| t.as_str()))
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(AnswerFailure::Malformed("content is neither text nor parts".into())),
    }
}

/// `query_vision_api`: one request with retries.
pub fn query_vision_api(
    config: &EndpointConfig,
    image: &Image,
    prompt: &str,
) -> Result<std::result::Result<QueryOutcome, AnswerFailure>> {
    Ok(RemoteTarget::new(config.clone())?.query(image, prompt))
}

impl TargetAnswerer for RemoteTarget {
    fn id(&self) -> String {
        self.config.model.clone()
    }

    fn kind(&self) -> TargetKind {
        TargetKind::RemoteApi
    }

    fn answer(&self, image: &Image, prompt: &str) -> std::result::Result<String, AnswerFailure> {
        self.query(image, prompt).map(|o| o.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Fixed extraction prompt; `None` asks each sample's own privacy questions.
    pub privacy_prompt: Option<String>,
    /// Compute attention from the sample's labels instead of probe questions.
    pub attention_from_labels: bool,
    /// A run fails when at least this fraction of samples is excluded.
    pub max_failure_fraction: f64,
    pub concurrency: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            privacy_prompt: None,
            attention_from_labels: true,
            max_failure_fraction: 0.1,
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub sample_id: String,
    pub kind: QaKind,
    pub prompt: String,
    pub gold: String,
    pub prediction: Option<String>,
    pub failure: Option<AnswerFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallStats {
    pub total_seconds: f64,
    pub protect_mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectorResult {
    pub protector: String,
    pub target: String,
    pub metrics: MetricsRecord,
    pub transcripts: Vec<Transcript>,
    pub excluded_samples: Vec<String>,
    pub wall: WallStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub config: EvalConfig,
    pub target_id: String,
    pub target_kind: TargetKind,
    pub embedder: String,
    pub privacy_prompt_version: u32,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run: RunInfo,
    pub rows: Vec<ProtectorResult>,
}

impl EvalReport {
    pub fn row(&self, protector: &str) -> Option<&ProtectorResult> {
        self.rows.iter().find(|r| r.protector == protector)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Scores the transcripts of samples that were not excluded.
pub fn metrics_from_transcripts(transcripts: &[Transcript], embedder: &dyn Embedder) -> Result<MetricsRecord> {
    let mut privacy = Vec::new();
    let mut normal = Vec::new();
    for t in transcripts {
        let Some(pred) = &t.prediction else { continue };
        let pair = (pred.clone(), t.gold.clone());
        match t.kind {
            QaKind::Privacy => privacy.push(pair),
            QaKind::Normal => normal.push(pair),
        }
    }
    MetricsRecord::from_pairs(&privacy, &normal, embedder)
}

/// Recomputes every row's metrics from its transcripts and compares exactly.
pub fn self_audit(report: &EvalReport, embedder: &dyn Embedder) -> Result<bool> {
    for row in &report.rows {
        if metrics_from_transcripts(&row.transcripts, embedder)? != row.metrics {
            return Ok(false);
        }
    }
    Ok(true)
}

struct SampleOutcome {
    transcripts: Vec<Transcript>,
    failed: bool,
    protect_seconds: f64,
}

fn run_sample(
    target: &dyn TargetAnswerer,
    protector: &dyn Protector,
    sample: &LabeledSample,
    cfg: &EvalConfig,
) -> Result<SampleOutcome> {
    let labels = cfg.attention_from_labels.then_some(QaLabels {
        privacy: &sample.privacy,
        normal: &sample.normal,
    });
    let start = Instant::now();
    let x = protector.protect(&sample.image, labels)?;
    let protect_seconds = start.elapsed().as_secs_f64();
    let mut transcripts = Vec::new();
    let mut failed = false;
    let mut record = |kind, prompt: &str, gold: &str, reply: std::result::Result<String, AnswerFailure>| {
        failed |= reply.is_err();
        let (prediction, failure) = match reply {
            Ok(p) => (Some(p), None),
            Err(f) => (None, Some(f)),
        };
        transcripts.push(Transcript {
            sample_id: sample.id.clone(),
            kind,
            prompt: prompt.to_string(),
            gold: gold.to_string(),
            prediction,
            failure,
        });
    };
    match &cfg.privacy_prompt {
        Some(prompt) => {
            let reply = target.answer(&x, prompt);
            for qa in &sample.privacy {
                record(QaKind::Privacy, prompt, &qa.answer, reply.clone());
            }
        }
        None => {
            for qa in &sample.privacy {
                record(QaKind::Privacy, &qa.question, &qa.answer, target.answer(&x, &qa.question));
            }
        }
    }
    for qa in &sample.normal {
        record(QaKind::Normal, &qa.question, &qa.answer, target.answer(&x, &qa.question));
    }
    if failed {
        for t in &mut transcripts {
            t.prediction = None;
        }
    }
    Ok(SampleOutcome {
        transcripts,
        failed,
        protect_seconds,
    })
}

/// Ordered parallel map with at most `workers` threads.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

/// Evaluates one protector on every sample.
pub fn evaluate_protector(
    target: &dyn TargetAnswerer,
    protector: &dyn Protector,
    samples: &[LabeledSample],
    cfg: &EvalConfig,
    embedder: &dyn Embedder,
) -> Result<ProtectorResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("evaluation split is empty".into()));
    }
    let start = Instant::now();
    let outcomes = parallel_map(samples, cfg.concurrency, |s| run_sample(target, protector, s, cfg))?;
    let mut transcripts = Vec::new();
    let mut excluded = Vec::new();
    let mut protect_total = 0.0;
    for (s, o) in samples.iter().zip(outcomes) {
        if o.failed {
            excluded.push(s.id.clone());
        }
        protect_total += o.protect_seconds;
        transcripts.extend(o.transcripts);
    }
    let fraction = excluded.len() as f64 / samples.len() as f64;
    if !excluded.is_empty() {
        log::warn!(
            "{}: {} of {} samples excluded after target failures",
            protector.name(),
            excluded.len(),
            samples.len()
        );
    }
    if fraction >= cfg.max_failure_fraction && !excluded.is_empty() {
        return Err(Error::Evaluation(format!(
            "{} of {} samples failed for {} (limit {:.0}%)",
            excluded.len(),
            samples.len(),
            protector.name(),
            cfg.max_failure_fraction * 100.0
        )));
    }
    let metrics = metrics_from_transcripts(&transcripts, embedder)?;
    Ok(ProtectorResult {
        protector: protector.name(),
        target: target.id(),
        metrics,
        transcripts,
        excluded_samples: excluded,
        wall: WallStats {
            total_seconds: start.elapsed().as_secs_f64(),
            protect_mean_seconds: protect_total / samples.len() as f64,
        },
    })
}

/// The unprotected row first, then one row per protector.
pub fn evaluate(
    target: &dyn TargetAnswerer,
    samples: &[LabeledSample],
    protectors: &[&dyn Protector],
    cfg: &EvalConfig,
    embedder: &dyn Embedder,
) -> Result<EvalReport> {
    let mut rows = vec![evaluate_protector(target, &Unprotected, samples, cfg, embedder)?];
    for p in protectors {
        rows.push(evaluate_protector(target, *p, samples, cfg, embedder)?);
    }
    Ok(EvalReport {
        run: RunInfo {
            config: cfg.clone(),
            target_id: target.id(),
            target_kind: target.kind(),
            embedder: embedder.id().to_string(),
            privacy_prompt_version: PRIVACY_PROMPT_VERSION,
            n_samples: samples.len(),
        },
        rows,
    })
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Table rows in the fixed metric column order.
pub fn write_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["protector", "target"];
    header.extend(COLUMN_NAMES);
    header.extend(["n_privacy", "n_normal", "excluded"]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for row in &report.rows {
        let mut rec = vec![row.protector.clone(), row.target.clone()];
        rec.extend(row.metrics.columns().iter().map(|v| fmt_cell(*v)));
        rec.push(row.metrics.n_privacy.to_string());
        rec.push(row.metrics.n_normal.to_string());
        rec.push(row.excluded_samples.len().to_string());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// Writes `report.json`, `table.csv` and `metrics.png` into `dir`.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::json("report", e))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = dir.join("table.csv");
    write_csv(report, &csv_path)?;
    let png_path = dir.join("metrics.png");
    let categories: Vec<String> = COLUMN_NAMES.iter().map(|c| c.to_lowercase()).collect();
    let series: Vec<(String, Vec<f64>)> = report
        .rows
        .iter()
        .map(|r| {
            (
                r.protector.clone(),
                r.metrics.columns().iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            )
        })
        .collect();
    plot::bar_plot(&png_path, "metrics by protector", &categories, &series)?;
    Ok(vec![json_path, csv_path, png_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub report: EvalReport,
}

/// Rejects checkpoint lists that differ in anything but ε.
pub fn check_sweep_checkpoints(checkpoints: &[GeneratorCheckpoint]) -> Result<()> {
    if checkpoints.len() < 2 {
        return Err(Error::InvalidInput(
            "an epsilon sweep needs at least two checkpoints".into(),
        ));
    }
    let strip = |c: &GeneratorCheckpoint| {
        let mut cfg = c.config.clone();
        cfg.epsilon = 0.0;
        (cfg, c.training_meta.clone())
    };
    let base = strip(&checkpoints[0]);
    for c in &checkpoints[1..] {
        if strip(c) != base {
            return Err(Error::Config(
                "sweep checkpoints differ in settings other than epsilon".into(),
            ));
        }
    }
    let mut eps: Vec<f64> = checkpoints.iter().map(|c| c.config.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("sweep checkpoints repeat an epsilon".into()));
    }
    Ok(())
}

/// Evaluates one generator per ε; rows are sorted by ε.
pub fn sweep_epsilon(
    checkpoints: &[GeneratorCheckpoint],
    model: Arc<dyn SurrogateModel>,
    target: &dyn TargetAnswerer,
    samples: &[LabeledSample],
    cfg: &EvalConfig,
    probe: &ProbeConfig,
    embedder: &dyn Embedder,
) -> Result<SweepResult> {
    check_sweep_checkpoints(checkpoints)?;
    let mut sorted: Vec<&GeneratorCheckpoint> = checkpoints.iter().collect();
    sorted.sort_by(|a, b| a.config.epsilon.total_cmp(&b.config.epsilon));
    let protectors = sorted
        .iter()
        .map(|c| {
            let name = format!("dualtap eps={:.0}/255", c.config.epsilon * 255.0);
            GeneratorProtector::new(c, model.clone(), probe.clone()).map(|p| p.with_name(name))
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Protector> = protectors.iter().map(|p| p as &dyn Protector).collect();
    let report = evaluate(target, samples, &refs, cfg, embedder)?;
    let rows = sorted
        .iter()
        .zip(&report.rows[1..])
        .map(|(c, r)| SweepRow {
            epsilon: c.config.epsilon,
            metrics: r.metrics.clone(),
        })
        .collect();
    Ok(SweepResult { rows, report })
}

/// Writes `sweep.json`, `sweep.csv` and `sweep.png` into `dir`.
pub fn emit_sweep(sweep: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("sweep.json");
    let json = serde_json::to_string_pretty(sweep).map_err(|e| Error::json("sweep", e))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_err(&csv_path, e))?;
    let mut header = vec!["epsilon"];
    header.extend(COLUMN_NAMES);
    w.write_record(&header).map_err(|e| csv_err(&csv_path, e))?;
    for row in &sweep.rows {
        let mut rec = vec![format!("{:.6}", row.epsilon)];
        rec.extend(row.metrics.columns().iter().map(|v| fmt_cell(*v)));
        w.write_record(&rec).map_err(|e| csv_err(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let png_path = dir.join("sweep.png");
    let xs: Vec<f64> = sweep.rows.iter().map(|r| (r.epsilon * 255.0).round()).collect();
    let series: Vec<(String, Vec<f64>)> = COLUMN_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            (
                name.to_lowercase(),
                sweep.rows.iter().map(|r| r.metrics.columns()[i].unwrap_or(f64::NAN)).collect(),
            )
        })
        .collect();
    plot::line_plot(&png_path, "metrics by perturbation bound", "epsilon x 255", &xs, &series, (0.0, 1.0))?;
    Ok(vec![json_path, csv_path, png_path])
}
