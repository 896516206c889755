use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pixveil::baselines::{Method, OcclusionParams};
use pixveil::evalharness::{
    emit_report, emit_sweep, evaluate, sweep_epsilon, EndpointConfig, EvalConfig, LocalTarget, RemoteTarget,
    TargetAnswerer, PRIVACY_PROMPT_V1,
};
use pixveil::generator::GeneratorCheckpoint;
use pixveil::imageio::{load_png, save_gray16};
use pixveil::metrics::HashedNgramEmbedder;
use pixveil::privscreen_synth::{build_dataset, DatasetConfig, Manifest, Split};
use pixveil::protector::{collect_inputs, protect_batch, GeneratorProtector, OcclusionProtector, ProbeConfig, Protector};
use pixveil::qa::QaKind;
use pixveil::saliency::{contrastive_attention, saliency_map};
use pixveil::surrogate::{SurrogateModel, SurrogateRegistry, TOY_GLYPH_ID};
use pixveil::training::{load_samples, plot_loss_curve, train, TrainConfig};
use pixveil::ImageShape;

#[derive(Parser)]
#[command(name = "pixveil", version, about = "Hide PII in screenshots from vision-language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic screenshot datasets.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Writes privacy, normal and contrastive attention heatmaps for one sample.
    Saliency(SaliencyArgs),
    /// Trains a generator.
    Train(TrainArgs),
    /// Protects images with a trained generator or an occlusion baseline.
    Protect(ProtectArgs),
    /// Scores protectors against a target answerer.
    Evaluate(EvaluateArgs),
    /// Compares checkpoints trained at different perturbation bounds.
    SweepEpsilon(SweepArgs),
}

#[derive(Subcommand)]
enum DatasetAction {
    Make {
        #[arg(long, default_value_t = 500)]
        n_images: usize,
        /// Comma-separated template ids; all ten by default.
        #[arg(long, value_delimiter = ',')]
        apps: Option<Vec<String>>,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long, default_value_t = 128)]
        image_side: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SurrogateArg {
    #[arg(long, default_value = TOY_GLYPH_ID)]
    surrogate: String,
}

impl SurrogateArg {
    fn load(&self, shape: ImageShape) -> Result<Arc<dyn SurrogateModel>> {
        Ok(SurrogateRegistry::with_defaults(shape)?.get(&self.surrogate)?)
    }
}

#[derive(Args)]
struct SaliencyArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    sample_id: String,
    /// Image to analyse instead of the one the manifest entry points to.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    surrogate: SurrogateArg,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    surrogate: SurrogateArg,
}

#[derive(Args)]
struct ProbeArgs {
    /// JSON file with probe questions used when no QA labels are available.
    #[arg(long)]
    probe_config: Option<PathBuf>,
}

impl ProbeArgs {
    fn load(&self) -> Result<ProbeConfig> {
        Ok(match &self.probe_config {
            Some(p) => ProbeConfig::load(p)?,
            None => ProbeConfig::default(),
        })
    }
}

#[derive(Args)]
struct ProtectArgs {
    #[arg(long, default_value = "dualtap")]
    method: String,
    /// Required for the dualtap method.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// A PNG file, a directory of PNGs, or a manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    probe: ProbeArgs,
    #[command(flatten)]
    surrogate: SurrogateArg,
}

#[derive(Args)]
struct TargetArgs {
    /// Endpoint config for a remote target; the local surrogate is used otherwise.
    #[arg(long)]
    endpoint: Option<PathBuf>,
    /// Fixed extraction prompt; remote targets default to the versioned prompt.
    #[arg(long)]
    privacy_prompt: Option<String>,
    /// Compute attention from probe questions instead of the QA labels.
    #[arg(long)]
    probe_attention: bool,
    #[arg(long, default_value_t = 1)]
    concurrency: usize,
    #[arg(long, value_enum, default_value = "eval")]
    split: SplitArg,
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SplitArg {
    Train,
    Eval,
}

impl TargetArgs {
    fn target(&self, model: Arc<dyn SurrogateModel>) -> Result<Box<dyn TargetAnswerer>> {
        Ok(match &self.endpoint {
            Some(p) => Box::new(RemoteTarget::new(EndpointConfig::load(p)?)?),
            None => Box::new(LocalTarget::new(model)),
        })
    }

    fn eval_config(&self) -> EvalConfig {
        let privacy_prompt = match (&self.privacy_prompt, &self.endpoint) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(_)) => Some(PRIVACY_PROMPT_V1.to_string()),
            (None, None) => None,
        };
        EvalConfig {
            privacy_prompt,
            attention_from_labels: !self.probe_attention,
            concurrency: self.concurrency,
            ..EvalConfig::default()
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated protection methods.
    #[arg(long, value_delimiter = ',', default_value = "dualtap")]
    methods: Vec<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    probe: ProbeArgs,
    #[command(flatten)]
    surrogate: SurrogateArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, num_args = 2.., required = true)]
    checkpoints: Vec<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    probe: ProbeArgs,
    #[command(flatten)]
    surrogate: SurrogateArg,
}

fn run_dir(base: &Path) -> Result<PathBuf> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
    let dir = base.join(format!("run-{secs}"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn manifest_shape(m: &Manifest) -> Result<ImageShape> {
    let rec = m.records.first().context("manifest has no records")?;
    Ok(rec.image_shape)
}

fn split_samples(m: &Manifest, t: &TargetArgs) -> Result<Vec<pixveil::training::LabeledSample>> {
    let split = match t.split {
        SplitArg::Train => Split::Train,
        SplitArg::Eval => Split::Eval,
    };
    let mut recs = m.split(split);
    if let Some(n) = t.limit {
        recs.truncate(n);
    }
    Ok(load_samples(m, &recs)?)
}

fn build_protector(
    method: Method,
    checkpoint: Option<&Path>,
    model: Arc<dyn SurrogateModel>,
    probe: ProbeConfig,
) -> Result<Box<dyn Protector>> {
    if method == Method::DualTap {
        let path = checkpoint.context("--checkpoint is required for dualtap")?;
        let ck = GeneratorCheckpoint::load(path)?;
        Ok(Box::new(GeneratorProtector::new(&ck, model, probe)?))
    } else {
        Ok(Box::new(OcclusionProtector::new(
            method,
            OcclusionParams::default(),
            Some(model),
            probe,
        )?))
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Dataset {
            action:
                DatasetAction::Make {
                    n_images,
                    apps,
                    master_seed,
                    image_side,
                    out_dir,
                },
        } => {
            let mut cfg = DatasetConfig {
                n_images,
                master_seed,
                image_side,
                ..DatasetConfig::default()
            };
            if let Some(a) = apps {
                cfg.app_ids = a;
            }
            let path = build_dataset(&cfg, &out_dir)?;
            println!("{}", path.display());
        }
        Command::Saliency(a) => {
            let m = Manifest::load(&a.manifest)?;
            let rec = m
                .records
                .iter()
                .find(|r| r.id == a.sample_id)
                .with_context(|| format!("no sample {} in the manifest", a.sample_id))?;
            let x = match &a.image {
                Some(p) => load_png(p)?,
                None => m.load_image(rec)?,
            };
            let model = a.surrogate.load(x.shape())?;
            let sp = saliency_map(model.as_ref(), &x, &rec.privacy_qa.pairs, QaKind::Privacy)?;
            let sn = saliency_map(model.as_ref(), &x, &rec.normal_qa.pairs, QaKind::Normal)?;
            let att = contrastive_attention(&sp, &sn)?;
            std::fs::create_dir_all(&a.out_dir)?;
            let stats = |v: &[f64]| {
                let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                serde_json::json!({"min": min, "max": max, "mean": mean})
            };
            let (p, n) = (sp.channel_mean(), sn.channel_mean());
            save_gray16(&p, x.shape(), &a.out_dir.join("saliency_privacy.png"))?;
            save_gray16(&n, x.shape(), &a.out_dir.join("saliency_normal.png"))?;
            save_gray16(&att.values, x.shape(), &a.out_dir.join("attention.png"))?;
            let record = serde_json::json!({
                "sample_id": rec.id,
                "surrogate": model.id(),
                "saliency_privacy": stats(&p),
                "saliency_normal": stats(&n),
                "attention": stats(&att.values),
            });
            std::fs::write(a.out_dir.join("stats.json"), serde_json::to_string_pretty(&record)?)?;
        }
        Command::Train(a) => {
            let cfg = match &a.config {
                Some(p) => TrainConfig::load(p)?,
                None => TrainConfig::default(),
            };
            let m = Manifest::load(&a.manifest)?;
            let model = a.surrogate.load(manifest_shape(&m)?)?;
            let train_set = load_samples(&m, &m.split(Split::Train))?;
            let holdout = load_samples(&m, &m.split(Split::Eval))?;
            let (ck, log) = train(&cfg, &train_set, &holdout, model.as_ref())?;
            std::fs::create_dir_all(&a.out_dir)?;
            ck.save(&a.out_dir.join("checkpoint.json"))?;
            log.write_jsonl(&a.out_dir.join("train_log.jsonl"))?;
            if cfg.epochs >= 2 {
                plot_loss_curve(&log, &a.out_dir.join("loss_curve.png"))?;
            }
            println!("{}", a.out_dir.join("checkpoint.json").display());
        }
        Command::Protect(a) => {
            let method: Method = a.method.parse()?;
            let inputs = collect_inputs(&a.input)?;
            let shape = match inputs.iter().find_map(|p| load_png(p).ok()) {
                Some(x) => x.shape(),
                None if inputs.is_empty() => ImageShape::new(128, 128),
                None => bail!("none of the {} inputs could be read", inputs.len()),
            };
            let model = a.surrogate.load(shape)?;
            let protector = build_protector(method, a.checkpoint.as_deref(), model, a.probe.load()?)?;
            let report = protect_batch(protector.as_ref(), &inputs, &a.out_dir)?;
            println!(
                "protected {} images, skipped {}, mean latency {:.3} s",
                report.entries.len(),
                report.skipped.len(),
                report.mean_latency().unwrap_or(0.0)
            );
            if !report.skipped.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Evaluate(a) => {
            let m = Manifest::load(&a.manifest)?;
            let model = a.surrogate.load(manifest_shape(&m)?)?;
            let samples = split_samples(&m, &a.target)?;
            let probe = a.probe.load()?;
            let protectors = a
                .methods
                .iter()
                .map(|s| build_protector(s.parse()?, a.checkpoint.as_deref(), model.clone(), probe.clone()))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&dyn Protector> = protectors.iter().map(|p| p.as_ref()).collect();
            let target = a.target.target(model)?;
            let embedder = HashedNgramEmbedder::default();
            let report = evaluate(target.as_ref(), &samples, &refs, &a.target.eval_config(), &embedder)?;
            let dir = run_dir(&a.out_dir)?;
            for p in emit_report(&report, &dir)? {
                println!("{}", p.display());
            }
        }
        Command::SweepEpsilon(a) => {
            let m = Manifest::load(&a.manifest)?;
            let model = a.surrogate.load(manifest_shape(&m)?)?;
            let samples = split_samples(&m, &a.target)?;
            let checkpoints = a
                .checkpoints
                .iter()
                .map(|p| GeneratorCheckpoint::load(p))
                .collect::<pixveil::Result<Vec<_>>>()?;
            let target = a.target.target(model.clone())?;
            let embedder = HashedNgramEmbedder::default();
            let sweep = sweep_epsilon(
                &checkpoints,
                model,
                target.as_ref(),
                &samples,
                &a.target.eval_config(),
                &a.probe.load()?,
                &embedder,
            )?;
            let dir = run_dir(&a.out_dir)?;
            for p in emit_sweep(&sweep, &dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
