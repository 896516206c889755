//! Dual-task training of the perturbation generator against a frozen surrogate.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generator::{apply_perturbation, Generator, GeneratorCheckpoint, GeneratorConfig, TrainingMeta};
use crate::nn::Adam;
use crate::privscreen_synth::{Manifest, SampleRecord};
use crate::qa::QaPair;
use crate::saliency::{attention_for, AttentionMap};
use crate::surrogate::{nll_qaset, weighted_nll_with_grad, SurrogateModel};
use crate::tensor::{hex_digest, Image, Tensor};

/// Default per-pair ceiling on the privacy loss inside the objective, in nats.
pub const LP_CEILING_DEFAULT: f64 = 20.0;

/// Generator architecture knobs that are not part of the training recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub levels: usize,
    pub base_channels: usize,
    pub film_hidden: usize,
    pub attention_input: bool,
    pub film: bool,
    pub attention_gain: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            levels: g.levels,
            base_channels: g.base_channels,
            film_hidden: g.film_hidden,
            attention_input: g.attention_input,
            film: g.film,
            attention_gain: g.attention_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub strength_s: f64,
    /// `None` disables the ceiling.
    pub lp_ceiling: Option<f64>,
    /// Samples from the held-out list scored after every epoch.
    pub snapshot_samples: usize,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            alpha: 1.0,
            beta: 1.0,
            learning_rate: 1e-4,
            batch_size: 4,
            epochs: 20,
            seed: 0,
            epsilon: g.epsilon,
            strength_s: g.strength_s,
            lp_ceiling: Some(LP_CEILING_DEFAULT),
            snapshot_samples: 16,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(c) = self.lp_ceiling {
            if !(c > 0.0) {
                return Err(Error::Config("lp_ceiling must be positive".into()));
            }
        }
        self.generator_config().validate()
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let a = &self.architecture;
        GeneratorConfig {
            epsilon: self.epsilon,
            strength_s: self.strength_s,
            levels: a.levels,
            base_channels: a.base_channels,
            film_hidden: a.film_hidden,
            attention_input: a.attention_input,
            film: a.film,
            attention_gain: a.attention_gain,
            seed: self.seed,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `L_n = Σ −log p(a | q, x_adv)` over the normal QA set.
pub fn task_preservation_loss(model: &dyn SurrogateModel, x_adv: &Image, normal: &[QaPair]) -> Result<f64> {
    nll_qaset(model, x_adv, normal)
}

/// `L_p = Σ −log p(a | q, x_adv)` over the privacy QA set.
pub fn privacy_interference_loss(model: &dyn SurrogateModel, x_adv: &Image, privacy: &[QaPair]) -> Result<f64> {
    nll_qaset(model, x_adv, privacy)
}

/// `α·L_n − β·L_p`.
pub fn composite_objective(l_n: f64, l_p: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Config(format!(
            "alpha and beta must be positive, got {alpha} and {beta}"
        )));
    }
    Ok(alpha * l_n - beta * l_p)
}

/// One image with both QA sets.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub id: String,
    pub image: Image,
    pub privacy: Vec<QaPair>,
    pub normal: Vec<QaPair>,
}

impl LabeledSample {
    pub fn from_record(manifest: &Manifest, rec: &SampleRecord) -> Result<Self> {
        if rec.privacy_qa.is_empty() || rec.normal_qa.is_empty() {
            return Err(Error::InvalidInput(format!("sample {} lacks a QA set", rec.id)));
        }
        Ok(Self {
            id: rec.id.clone(),
            image: manifest.load_image(rec)?,
            privacy: rec.privacy_qa.pairs.clone(),
            normal: rec.normal_qa.pairs.clone(),
        })
    }
}

pub fn load_samples(manifest: &Manifest, records: &[&SampleRecord]) -> Result<Vec<LabeledSample>> {
    records.iter().map(|r| LabeledSample::from_record(manifest, r)).collect()
}

/// Hash over the ordered image and QA contents of a sample list.
pub fn samples_hash(samples: &[LabeledSample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update(s.image.content_hash().as_bytes());
        for qa in s.privacy.iter().chain(&s.normal) {
            h.update(qa.question.as_bytes());
            h.update([0]);
            h.update(qa.answer.as_bytes());
            h.update([0]);
        }
    }
    hex_digest(h.finalize().as_slice())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    /// Batch means of the raw losses.
    pub l_n: f64,
    pub l_p: f64,
    /// Batch mean of the privacy loss after the per-pair ceiling.
    pub l_p_clamped: f64,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub epoch: usize,
    pub samples: usize,
    pub l_n: f64,
    pub l_p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<EpochSnapshot>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogLine {
    Step(StepRecord),
    Snapshot(EpochSnapshot),
}

impl TrainLog {
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let mut snaps = self.snapshots.iter().peekable();
        for s in &self.steps {
            while let Some(snap) = snaps.next_if(|e| e.epoch < s.epoch) {
                push_line(&mut out, &LogLine::Snapshot(snap.clone()))?;
            }
            push_line(&mut out, &LogLine::Step(s.clone()))?;
        }
        for snap in snaps {
            push_line(&mut out, &LogLine::Snapshot(snap.clone()))?;
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut log = Self::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line).map_err(|e| Error::json(path.display().to_string(), e))? {
                LogLine::Step(s) => log.steps.push(s),
                LogLine::Snapshot(s) => log.snapshots.push(s),
            }
        }
        Ok(log)
    }

    /// Mean of a per-step quantity over the steps of one epoch.
    pub fn epoch_mean(&self, epoch: usize, f: impl Fn(&StepRecord) -> f64) -> Option<f64> {
        let v: Vec<f64> = self.steps.iter().filter(|s| s.epoch == epoch).map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn push_line(out: &mut Vec<u8>, line: &LogLine) -> Result<()> {
    serde_json::to_writer(&mut *out, line).map_err(|e| Error::json("train log", e))?;
    out.write_all(b"\n").expect("writing to a Vec cannot fail");
    Ok(())
}

/// Optional transform of the clean image before the perturbation is generated.
pub type Augmentation = Box<dyn Fn(&Image, &mut ChaCha8Rng) -> Image + Send + Sync>;

/// Attention maps of clean images keyed by `(image hash, surrogate id)`.
#[derive(Default)]
pub struct AttentionCache {
    maps: HashMap<(String, String), Arc<AttentionMap>>,
    misses: usize,
}

impl AttentionCache {
    pub fn get_or_compute(
        &mut self,
        model: &dyn SurrogateModel,
        generator: &Generator,
        sample: &LabeledSample,
    ) -> Result<Arc<AttentionMap>> {
        let key = (sample.image.content_hash(), model.id().to_string());
        if let Some(a) = self.maps.get(&key) {
            return Ok(a.clone());
        }
        self.misses += 1;
        let shapes = generator.level_shapes(sample.image.shape())?;
        let a = Arc::new(attention_for(model, &sample.image, &sample.privacy, &sample.normal)?.build_pyramid(&shapes)?);
        self.maps.insert(key, a.clone());
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn misses(&self) -> usize {
        self.misses
    }
}

/// Per-sample losses and the gradient of the batch objective with respect to δ.
struct SampleEval {
    l_n: f64,
    l_p: f64,
    l_p_clamped: f64,
}

pub struct Trainer<'m> {
    config: TrainConfig,
    model: &'m dyn SurrogateModel,
    generator: Generator,
    adam: Adam,
    cache: AttentionCache,
    augmentation: Option<Augmentation>,
    log: TrainLog,
    rng: ChaCha8Rng,
}

impl<'m> Trainer<'m> {
    pub fn new(config: TrainConfig, model: &'m dyn SurrogateModel) -> Result<Self> {
        config.validate()?;
        if !model.is_differentiable() {
            return Err(Error::NotDifferentiable(model.id().to_string()));
        }
        let generator = Generator::new(config.generator_config())?;
        let adam = Adam::new(generator.num_params(), config.learning_rate as f32);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            model,
            generator,
            adam,
            cache: AttentionCache::default(),
            augmentation: None,
            log: TrainLog::default(),
            rng,
        })
    }

    pub fn set_augmentation(&mut self, aug: Augmentation) {
        self.augmentation = Some(aug);
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn cache(&self) -> &AttentionCache {
        &self.cache
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn ceiling(&self) -> f64 {
        self.config.lp_ceiling.unwrap_or(f64::INFINITY)
    }

    /// Losses of one sample; when `grad` is given, adds `∂objective/∂φ` for a
    /// batch of `batch_len` samples into it.
    fn evaluate_sample(
        &mut self,
        sample: &LabeledSample,
        batch_len: usize,
        grad: Option<&mut [f32]>,
    ) -> Result<SampleEval> {
        let attention = self.cache.get_or_compute(self.model, &self.generator, sample)?;
        let x = match &self.augmentation {
            Some(aug) => aug(&sample.image, &mut self.rng),
            None => sample.image.clone(),
        };
        let ceiling = self.ceiling();
        let Some(grad) = grad else {
            let delta = self.generator.generate(&x, &attention)?;
            let x_adv = apply_perturbation(&x, &delta)?;
            let l_n = nll_qaset(self.model, &x_adv, &sample.normal)?;
            let mut l_p = 0.0;
            let mut l_p_clamped = 0.0;
            for qa in &sample.privacy {
                let v = nll_qaset(self.model, &x_adv, std::slice::from_ref(qa))?;
                l_p += v;
                l_p_clamped += v.min(ceiling);
            }
            return Ok(SampleEval { l_n, l_p, l_p_clamped });
        };

        let (delta, cache) = self.generator.forward(&x, &attention)?;
        let x_adv = apply_perturbation(&x, &delta)?;
        let scale = 1.0 / batch_len as f64;
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let (n_nll, g_n) = weighted_nll_with_grad(self.model, &x_adv, &sample.normal, |_, _| alpha * scale)?;
        let (p_nll, g_p) = weighted_nll_with_grad(self.model, &x_adv, &sample.privacy, |_, nll| {
            if nll > ceiling {
                0.0
            } else {
                -beta * scale
            }
        })?;
        let mut gd = Tensor::zeros(3, x.height(), x.width());
        for (i, g) in gd.data.iter_mut().enumerate() {
            let v = x.data()[i] + delta.data[i];
            if (0.0..=1.0).contains(&v) {
                *g = (g_n[i] + g_p[i]) as f32;
            }
        }
        self.generator.backward(&cache, &gd, grad);
        Ok(SampleEval {
            l_n: n_nll.iter().sum(),
            l_p: p_nll.iter().sum(),
            l_p_clamped: p_nll.iter().map(|v| v.min(ceiling)).sum(),
        })
    }

    /// Composite objective of a batch under the current weights.
    pub fn batch_objective(&mut self, batch: &[&LabeledSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let (mut ln, mut lp) = (0.0, 0.0);
        for s in batch {
            let e = self.evaluate_sample(s, batch.len(), None)?;
            ln += e.l_n;
            lp += e.l_p_clamped;
        }
        let b = batch.len() as f64;
        composite_objective(ln / b, lp / b, self.config.alpha, self.config.beta)
    }

    /// One Adam step on a batch.
    pub fn step(&mut self, batch: &[&LabeledSample], epoch: usize) -> Result<StepRecord> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let step = self.log.steps.len();
        let mut grads = vec![0.0f32; self.generator.num_params()];
        let (mut ln, mut lp, mut lpc) = (0.0, 0.0, 0.0);
        for s in batch {
            let e = self.evaluate_sample(s, batch.len(), Some(&mut grads))?;
            ln += e.l_n;
            lp += e.l_p;
            lpc += e.l_p_clamped;
        }
        let b = batch.len() as f64;
        let objective = composite_objective(ln / b, lpc / b, self.config.alpha, self.config.beta)?;
        let grad_norm = grads.iter().map(|g| (*g as f64).powi(2)).sum::<f64>().sqrt();
        if !objective.is_finite() || !grad_norm.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        self.adam.step(self.generator.params_mut(), &grads);
        let rec = StepRecord {
            step,
            epoch,
            l_n: ln / b,
            l_p: lp / b,
            l_p_clamped: lpc / b,
            objective,
            grad_norm,
        };
        log::debug!(
            "step {step} epoch {epoch}: L_n {:.4} L_p {:.4} obj {:.4} |g| {:.3e}",
            rec.l_n,
            rec.l_p,
            rec.objective,
            rec.grad_norm
        );
        self.log.steps.push(rec.clone());
        Ok(rec)
    }

    /// Mean raw losses over `samples` under the current weights.
    pub fn mean_losses(&mut self, samples: &[LabeledSample]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("no samples to score".into()));
        }
        let (mut ln, mut lp) = (0.0, 0.0);
        for s in samples {
            let e = self.evaluate_sample(s, 1, None)?;
            ln += e.l_n;
            lp += e.l_p;
        }
        let n = samples.len() as f64;
        Ok((ln / n, lp / n))
    }

    /// Runs one shuffled pass over `samples`.
    pub fn train_epoch(&mut self, samples: &[LabeledSample], epoch: usize) -> Result<()> {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.config.seed ^ (epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&LabeledSample> = chunk.iter().map(|i| &samples[*i]).collect();
            self.step(&batch, epoch)?;
        }
        Ok(())
    }

    pub fn snapshot(&mut self, holdout: &[LabeledSample], epoch: usize) -> Result<()> {
        let k = self.config.snapshot_samples.min(holdout.len());
        if k == 0 {
            return Ok(());
        }
        let (l_n, l_p) = self.mean_losses(&holdout[..k])?;
        log::info!("epoch {epoch}: held-out L_n {l_n:.4} L_p {l_p:.4}");
        self.log.snapshots.push(EpochSnapshot {
            epoch,
            samples: k,
            l_n,
            l_p,
        });
        Ok(())
    }

    pub fn into_result(self, dataset_hash: String) -> (GeneratorCheckpoint, TrainLog) {
        let c = &self.config;
        let meta = TrainingMeta {
            alpha: c.alpha,
            beta: c.beta,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            epochs: c.epochs,
            seed: c.seed,
            lp_ceiling: c.lp_ceiling,
            dataset_hash,
            surrogate_id: self.model.id().to_string(),
        };
        (self.generator.to_checkpoint(Some(meta)), self.log)
    }
}

/// Trains for `config.epochs` epochs and returns the final checkpoint and log.
pub fn train(
    config: &TrainConfig,
    samples: &[LabeledSample],
    holdout: &[LabeledSample],
    model: &dyn SurrogateModel,
) -> Result<(GeneratorCheckpoint, TrainLog)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("training split is empty".into()));
    }
    for s in samples {
        if s.privacy.is_empty() || s.normal.is_empty() {
            return Err(Error::InvalidInput(format!("sample {} lacks a QA set", s.id)));
        }
    }
    let mut trainer = Trainer::new(config.clone(), model)?;
    for epoch in 0..config.epochs {
        trainer.train_epoch(samples, epoch)?;
        trainer.snapshot(holdout, epoch)?;
    }
    Ok(trainer.into_result(samples_hash(samples)))
}

/// Per-epoch mean losses, each divided by its largest epoch mean.
pub fn plot_loss_curve(log: &TrainLog, path: &Path) -> Result<()> {
    let epochs: Vec<usize> = {
        let mut e: Vec<usize> = log.steps.iter().map(|s| s.epoch).collect();
        e.dedup();
        e
    };
    let xs: Vec<f64> = epochs.iter().map(|e| *e as f64).collect();
    let scaled = |f: fn(&StepRecord) -> f64| -> Vec<f64> {
        let v: Vec<f64> = epochs.iter().map(|e| log.epoch_mean(*e, f).unwrap_or(f64::NAN)).collect();
        let max = v.iter().cloned().fold(0.0f64, f64::max);
        v.iter().map(|x| if max > 0.0 { x / max } else { 0.0 }).collect()
    };
    let series = vec![
        ("l_n / max".to_string(), scaled(|s| s.l_n)),
        ("l_p / max".to_string(), scaled(|s| s.l_p)),
    ];
    crate::plot::line_plot(path, "training losses", "epoch", &xs, &series, (0.0, 1.0))
}
