//! Inference-time protection: attention from probe questions, one generator
//! forward pass, and lossless output.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{occlude, Method, OcclusionParams};
use crate::error::{Error, Result};
use crate::generator::{apply_perturbation, Generator, GeneratorCheckpoint};
use crate::imageio::{load_png, quantize_within, save_png};
use crate::privscreen_synth::{normal_questions, privacy_question, Manifest};
use crate::qa::{QaKind, QaPair};
use crate::saliency::{contrastive_attention, saliency_map, AttentionMap, SaliencyMap};
use crate::screen::PiiKind;
use crate::surrogate::{decode_answer, SurrogateModel, MAX_ANSWER_TOKENS};
use crate::tensor::{hex_digest, Image};

/// Questions whose greedy answers stand in for QA labels at deployment time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub privacy_questions: Vec<String>,
    pub normal_questions: Vec<String>,
    pub max_tokens: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            privacy_questions: PiiKind::ALL.iter().map(|k| privacy_question(*k).to_string()).collect(),
            normal_questions: normal_questions().iter().map(|q| q.to_string()).collect(),
            max_tokens: MAX_ANSWER_TOKENS,
        }
    }
}

impl ProbeConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

fn probe_set(model: &dyn SurrogateModel, x: &Image, questions: &[String], max_tokens: usize) -> Result<Vec<QaPair>> {
    let mut out = Vec::new();
    for q in questions {
        match decode_answer(model, x, q, max_tokens) {
            Ok(a) if !a.trim().is_empty() => out.push(QaPair::new(q.clone(), a)),
            Ok(_) => {}
            Err(Error::UnsupportedQuestion { .. }) => {
                log::warn!("probe question {q:?} is not supported by {}; skipped", model.id());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Self-labelled QA sets: each probe question paired with the surrogate's own
/// greedy answer. Empty answers are dropped.
pub fn probe_qa(model: &dyn SurrogateModel, x: &Image, probe: &ProbeConfig) -> Result<(Vec<QaPair>, Vec<QaPair>)> {
    Ok((
        probe_set(model, x, &probe.privacy_questions, probe.max_tokens)?,
        probe_set(model, x, &probe.normal_questions, probe.max_tokens)?,
    ))
}

/// Contrastive attention that tolerates empty QA sets: no privacy pairs give
/// a zero map, no normal pairs give a zero normal saliency.
pub fn attention_or_zero(
    model: &dyn SurrogateModel,
    x: &Image,
    privacy: &[QaPair],
    normal: &[QaPair],
) -> Result<AttentionMap> {
    if privacy.is_empty() {
        return Ok(AttentionMap::zeros(x.shape()));
    }
    let sp = saliency_map(model, x, privacy, QaKind::Privacy)?;
    let sn = if normal.is_empty() {
        SaliencyMap::new(x.shape(), vec![0.0; 3 * x.shape().pixels()], QaKind::Normal)?
    } else {
        saliency_map(model, x, normal, QaKind::Normal)?
    };
    contrastive_attention(&sp, &sn)
}

/// Labelled QA sets for one image, when the caller has them.
#[derive(Debug, Clone, Copy)]
pub struct QaLabels<'a> {
    pub privacy: &'a [QaPair],
    pub normal: &'a [QaPair],
}

/// Attention from labels when given, else from the probe.
pub fn attention_from(
    model: &dyn SurrogateModel,
    x: &Image,
    labels: Option<QaLabels<'_>>,
    probe: &ProbeConfig,
) -> Result<AttentionMap> {
    match labels {
        Some(l) => attention_or_zero(model, x, l.privacy, l.normal),
        None => {
            let (p, n) = probe_qa(model, x, probe)?;
            attention_or_zero(model, x, &p, &n)
        }
    }
}

/// `clip(x + generate(x, A))`, unquantized.
pub fn protect_image(generator: &Generator, x: &Image, attention: AttentionMap) -> Result<Image> {
    let shapes = generator.level_shapes(x.shape())?;
    let a = attention.build_pyramid(&shapes)?;
    let delta = generator.generate(x, &a)?;
    apply_perturbation(x, &delta)
}

/// Image in, image out. Outputs are on the 8-bit grid so what is evaluated is
/// exactly what would be written to disk.
pub trait Protector: Send + Sync {
    fn name(&self) -> String;

    fn protect(&self, x: &Image, labels: Option<QaLabels<'_>>) -> Result<Image>;
}

/// Rounds every value to the nearest 8-bit level.
pub fn to_8bit(x: &Image) -> Image {
    quantize_within(x, x, 1.0)
}

/// Leaves the image unchanged apart from 8-bit rounding.
pub struct Unprotected;

impl Protector for Unprotected {
    fn name(&self) -> String {
        "none".into()
    }

    fn protect(&self, x: &Image, _labels: Option<QaLabels<'_>>) -> Result<Image> {
        Ok(to_8bit(x))
    }
}

/// The trained attention-conditioned generator.
pub struct GeneratorProtector {
    generator: Generator,
    model: Arc<dyn SurrogateModel>,
    probe: ProbeConfig,
    name: String,
}

impl GeneratorProtector {
    pub fn new(checkpoint: &GeneratorCheckpoint, model: Arc<dyn SurrogateModel>, probe: ProbeConfig) -> Result<Self> {
        if let Some(meta) = &checkpoint.training_meta {
            if meta.surrogate_id != model.id() {
                log::warn!(
                    "checkpoint was trained against {} but attention comes from {}",
                    meta.surrogate_id,
                    model.id()
                );
            }
        }
        let generator = Generator::from_checkpoint(checkpoint)?;
        Ok(Self {
            generator,
            model,
            probe,
            name: Method::DualTap.to_string(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn epsilon(&self) -> f64 {
        self.generator.config().epsilon
    }
}

impl Protector for GeneratorProtector {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn protect(&self, x: &Image, labels: Option<QaLabels<'_>>) -> Result<Image> {
        let attention = attention_from(self.model.as_ref(), x, labels, &self.probe)?;
        let adv = protect_image(&self.generator, x, attention)?;
        Ok(quantize_within(x, &adv, self.epsilon()))
    }
}

/// Blur, mosaic or mask, globally or gated by attention.
pub struct OcclusionProtector {
    method: Method,
    params: OcclusionParams,
    model: Option<Arc<dyn SurrogateModel>>,
    probe: ProbeConfig,
}

impl OcclusionProtector {
    /// `model` supplies attention and is required for the gated variants.
    pub fn new(
        method: Method,
        params: OcclusionParams,
        model: Option<Arc<dyn SurrogateModel>>,
        probe: ProbeConfig,
    ) -> Result<Self> {
        if method == Method::DualTap {
            return Err(Error::InvalidInput("dualtap needs a generator checkpoint".into()));
        }
        if method.uses_attention() && model.is_none() {
            return Err(Error::InvalidInput(format!("{method} needs a surrogate for attention")));
        }
        Ok(Self {
            method,
            params,
            model,
            probe,
        })
    }
}

impl Protector for OcclusionProtector {
    fn name(&self) -> String {
        self.method.to_string()
    }

    fn protect(&self, x: &Image, labels: Option<QaLabels<'_>>) -> Result<Image> {
        let attention = match (&self.model, self.method.uses_attention()) {
            (Some(m), true) => Some(attention_from(m.as_ref(), x, labels, &self.probe)?),
            _ => None,
        };
        Ok(to_8bit(&occlude(self.method, x, attention.as_ref(), &self.params)?))
    }
}

/// One line of the batch index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub input: PathBuf,
    pub output: PathBuf,
    pub method: String,
    pub input_hash: String,
    /// SHA-256 of the written PNG file.
    pub output_hash: String,
    pub max_abs_delta: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BatchReport {
    pub entries: Vec<IndexEntry>,
    pub skipped: Vec<(PathBuf, String)>,
    pub index_path: PathBuf,
}

impl BatchReport {
    pub fn mean_latency(&self) -> Option<f64> {
        (!self.entries.is_empty())
            .then(|| self.entries.iter().map(|e| e.wall_seconds).sum::<f64>() / self.entries.len() as f64)
    }
}

pub const INDEX_FILE: &str = "index.jsonl";

/// Expands a PNG file, a directory of PNGs, or a `.jsonl` manifest into image paths.
pub fn collect_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut out: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| Error::io(input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        out.sort();
        return Ok(out);
    }
    if input.extension().is_some_and(|e| e == "jsonl") {
        let m = Manifest::load(input)?;
        return Ok(m.records.iter().map(|r| m.image_path(r)).collect());
    }
    Ok(vec![input.to_path_buf()])
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex_digest(Sha256::digest(&bytes).as_slice()))
}

fn max_abs_diff(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs() as f64)
        .fold(0.0, f64::max)
}

/// Protects every input without labels and writes `<out_dir>/<stem>.png` plus
/// an index. Unreadable inputs are skipped and reported.
pub fn protect_batch(protector: &dyn Protector, inputs: &[PathBuf], out_dir: &Path) -> Result<BatchReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = BatchReport {
        index_path: out_dir.join(INDEX_FILE),
        ..Default::default()
    };
    let mut used = HashSet::new();
    let mut index = String::new();
    for input in inputs {
        let x = match load_png(input) {
            Ok(x) => x,
            Err(e) => {
                log::error!("skipping {}: {e}", input.display());
                report.skipped.push((input.clone(), e.to_string()));
                continue;
            }
        };
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let mut name = format!("{stem}.png");
        let mut k = 1;
        while !used.insert(name.clone()) {
            name = format!("{stem}_{k}.png");
            k += 1;
        }
        let output = out_dir.join(&name);
        if output.canonicalize().ok().is_some_and(|o| input.canonicalize().ok() == Some(o)) {
            return Err(Error::InvalidInput(format!(
                "output {} would overwrite its input",
                output.display()
            )));
        }
        let start = Instant::now();
        let adv = protector.protect(&x, None)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        save_png(&adv, &output)?;
        let entry = IndexEntry {
            input: input.clone(),
            output: output.clone(),
            method: protector.name(),
            input_hash: x.content_hash(),
            output_hash: file_sha256(&output)?,
            max_abs_delta: max_abs_diff(&x, &adv),
            wall_seconds,
        };
        index.push_str(&serde_json::to_string(&entry).map_err(|e| Error::json("index", e))?);
        index.push('\n');
        report.entries.push(entry);
    }
    std::fs::write(&report.index_path, index).map_err(|e| Error::io(&report.index_path, e))?;
    Ok(report)
}

pub fn read_index(path: &Path) -> Result<Vec<IndexEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json(path.display().to_string(), e)))
        .collect()
}
