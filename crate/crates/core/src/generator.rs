//! Attention-conditioned U-Net perturbation generator.
//!
//! The encoder sees the image plus the attention map as a fourth channel. Every
//! decoder level is affine-modulated by coefficient maps that a small
//! per-level convolutional net predicts from the downsampled attention map.
//! The output passes through `tanh` and is scaled by ε, so `‖δ‖∞ ≤ ε` holds by
//! construction rather than by projection.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{self, Conv2d, ParamAllocator};
use crate::saliency::AttentionMap;
use crate::tensor::{hex_digest, Image, ImageShape, Tensor};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// The three bounds used for paper-matching runs, in pixel-intensity units.
pub const EPSILON_LOW: f64 = 64.0 / 255.0;
pub const EPSILON_DEFAULT: f64 = 128.0 / 255.0;
pub const EPSILON_HIGH: f64 = 192.0 / 255.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// L∞ bound on the perturbation.
    pub epsilon: f64,
    /// Modulation strength `s`; also scales the encoder's attention channel.
    pub strength_s: f64,
    /// Number of resolutions; level `k` runs at `(H/2^k, W/2^k)`.
    pub levels: usize,
    pub base_channels: usize,
    /// Hidden width of each per-level coefficient network.
    pub film_hidden: usize,
    /// Feed the attention map to the encoder as a fourth input channel.
    pub attention_input: bool,
    /// Modulate decoder features with attention-predicted coefficients.
    pub film: bool,
    /// Fixed multiplier applied to attention values before they enter the network.
    pub attention_gain: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            epsilon: EPSILON_DEFAULT,
            strength_s: 0.1,
            levels: 3,
            base_channels: 8,
            film_hidden: 4,
            attention_input: true,
            film: true,
            attention_gain: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.strength_s >= 0.0 && self.strength_s.is_finite()) {
            return Err(Error::Config("strength_s must be finite and >= 0".into()));
        }
        if self.levels < 2 {
            return Err(Error::Config("generator needs at least 2 levels".into()));
        }
        if self.base_channels == 0 || self.film_hidden == 0 {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        Ok(())
    }

    /// Spatial shapes of decoder levels 0..levels for an input of `shape`.
    pub fn level_shapes(&self, shape: ImageShape) -> Result<Vec<ImageShape>> {
        let div = 1usize << (self.levels - 1);
        if shape.height % div != 0 || shape.width % div != 0 {
            return Err(Error::Shape(format!(
                "{}x{} is not divisible by 2^{} as a {}-level generator requires",
                shape.height,
                shape.width,
                self.levels - 1,
                self.levels
            )));
        }
        Ok((0..self.levels)
            .map(|k| ImageShape::new(shape.height >> k, shape.width >> k))
            .collect())
    }

    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    /// Largest `f32` not above ε, so the scaled `tanh` never exceeds the bound.
    fn epsilon_f32(&self) -> f32 {
        let mut e = self.epsilon as f32;
        if e as f64 > self.epsilon {
            e = f32::from_bits(e.to_bits() - 1);
        }
        e
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncoderBlock {
    conv_a: Conv2d,
    conv_b: Conv2d,
}

/// `L_cnn^(k)`: 3×3 conv → leaky ReLU → 1×1 conv to `2·C_k` channels (γ then β).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoefficientNet {
    hidden: Conv2d,
    head: Conv2d,
}

#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
    encoder: Vec<EncoderBlock>,
    /// `decoder[k]` fuses level `k+1` (upsampled) with skip `k`.
    decoder: Vec<Conv2d>,
    coeff_nets: Vec<CoefficientNet>,
    output: Conv2d,
    params: Vec<f32>,
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    enc_in: Vec<Tensor>,
    enc_a: Vec<Tensor>,
    skips: Vec<Tensor>,
    coeff_in: Vec<Tensor>,
    coeff_hidden: Vec<Tensor>,
    gammas: Vec<Tensor>,
    /// Decoder features before modulation, per level.
    pre_film: Vec<Tensor>,
    dec_in: Vec<Tensor>,
    out_in: Tensor,
    tanh_out: Tensor,
}

impl Generator {
    /// Builds a generator with He-initialised hidden layers, a zero output
    /// layer (so `δ = 0` at initialisation) and zero coefficient heads.
    pub fn new(config: GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let mut alloc = ParamAllocator::default();
        let in_ch = if config.attention_input { 4 } else { 3 };
        let mut encoder = Vec::new();
        for k in 0..config.levels {
            let cin = if k == 0 { in_ch } else { config.channels(k - 1) };
            let c = config.channels(k);
            encoder.push(EncoderBlock {
                conv_a: Conv2d::new(&mut alloc, cin, c, 3),
                conv_b: Conv2d::new(&mut alloc, c, c, 3),
            });
        }
        let mut decoder = Vec::new();
        for k in 0..config.levels - 1 {
            let cin = config.channels(k + 1) + config.channels(k);
            decoder.push(Conv2d::new(&mut alloc, cin, config.channels(k), 3));
        }
        let mut coeff_nets = Vec::new();
        for k in 0..config.levels {
            coeff_nets.push(CoefficientNet {
                hidden: Conv2d::new(&mut alloc, 1, config.film_hidden, 3),
                head: Conv2d::new(&mut alloc, config.film_hidden, 2 * config.channels(k), 1),
            });
        }
        let output = Conv2d::new(&mut alloc, config.channels(0), 3, 3);

        let mut params = vec![0.0f32; alloc.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for b in &encoder {
            b.conv_a.init_he(&mut params, &mut rng);
            b.conv_b.init_he(&mut params, &mut rng);
        }
        for d in &decoder {
            d.init_he(&mut params, &mut rng);
        }
        for n in &coeff_nets {
            n.hidden.init_he(&mut params, &mut rng);
            n.head.init_zero(&mut params);
        }
        output.init_zero(&mut params);

        Ok(Self {
            config,
            encoder,
            decoder,
            coeff_nets,
            output,
            params,
        })
    }

    /// Every parameter drawn uniformly from `[-scale, scale]`; used for
    /// property tests that need non-trivial output and coefficient layers.
    pub fn with_random_weights(config: GeneratorConfig, seed: u64, scale: f32) -> Result<Self> {
        use rand::Rng;
        let mut g = Self::new(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut g.params {
            *p = rng.gen_range(-scale..scale);
        }
        Ok(g)
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn level_shapes(&self, shape: ImageShape) -> Result<Vec<ImageShape>> {
        self.config.level_shapes(shape)
    }

    fn check_attention(&self, x: &Image, attention: &AttentionMap) -> Result<()> {
        let shapes = self.level_shapes(x.shape())?;
        if attention.shape() != x.shape() {
            return Err(Error::Shape(format!(
                "attention map {}x{} does not match image {}",
                attention.height, attention.width, x.shape()
            )));
        }
        if attention.pyramid.len() != shapes.len()
            || attention
                .pyramid
                .iter()
                .zip(&shapes)
                .any(|(lvl, s)| lvl.shape() != *s)
        {
            return Err(Error::MissingPyramid(format!(
                "generator expects {} levels {:?}, attention map has {}",
                shapes.len(),
                shapes.iter().map(|s| (s.height, s.width)).collect::<Vec<_>>(),
                attention.pyramid.len()
            )));
        }
        Ok(())
    }

    /// Predicts `(γ_k, β_k)` from a level-`k` attention map.
    pub fn modulation_coeffs(&self, level: usize, attention_level: &Tensor) -> Result<(Tensor, Tensor)> {
        if level >= self.config.levels {
            return Err(Error::InvalidInput(format!(
                "level {level} out of range for a {}-level generator",
                self.config.levels
            )));
        }
        if attention_level.channels != 1 {
            return Err(Error::Shape("attention level must have one channel".into()));
        }
        let (_, gamma, beta) = self.coefficients(level, attention_level);
        Ok((gamma, beta))
    }

    fn coefficients(&self, level: usize, a: &Tensor) -> (Tensor, Tensor, Tensor) {
        let net = &self.coeff_nets[level];
        let hidden = nn::leaky_relu(&net.hidden.forward(&self.params, a));
        let coeffs = net.head.forward(&self.params, &hidden);
        let c = self.config.channels(level);
        let mut parts = coeffs.split_channels(&[c, c]).into_iter();
        let gamma = parts.next().unwrap();
        let beta = parts.next().unwrap();
        (hidden, gamma, beta)
    }

    fn attention_tensor(&self, attention: &AttentionMap, level: usize, scale: f64) -> Tensor {
        let lvl = &attention.pyramid[level];
        Tensor {
            channels: 1,
            height: lvl.height,
            width: lvl.width,
            data: lvl.values.iter().map(|v| (v * scale) as f32).collect(),
        }
    }

    /// One feed-forward pass: `δ = ε · tanh(G'(x; A))`.
    pub fn generate(&self, x: &Image, attention: &AttentionMap) -> Result<Tensor> {
        Ok(self.forward(x, attention)?.0)
    }

    pub fn forward(&self, x: &Image, attention: &AttentionMap) -> Result<(Tensor, ForwardCache)> {
        self.check_attention(x, attention)?;
        let cfg = &self.config;
        let strength = cfg.strength_s as f32;
        let levels = cfg.levels;

        let input = if cfg.attention_input {
            let a0 = self.attention_tensor(attention, 0, cfg.attention_gain * cfg.strength_s);
            Tensor::concat_channels(&[x.as_tensor(), &a0])
        } else {
            x.as_tensor().clone()
        };

        let mut enc_in = Vec::with_capacity(levels);
        let mut enc_a = Vec::with_capacity(levels);
        let mut skips: Vec<Tensor> = Vec::with_capacity(levels);
        for (k, block) in self.encoder.iter().enumerate() {
            let inp = if k == 0 {
                input.clone()
            } else {
                nn::avg_pool2(&skips[k - 1])
            };
            let a = nn::leaky_relu(&block.conv_a.forward(&self.params, &inp));
            let s = nn::leaky_relu(&block.conv_b.forward(&self.params, &a));
            enc_in.push(inp);
            enc_a.push(a);
            skips.push(s);
        }

        let mut coeff_in = vec![Tensor::zeros(0, 0, 0); levels];
        let mut coeff_hidden = vec![Tensor::zeros(0, 0, 0); levels];
        let mut gammas = vec![Tensor::zeros(0, 0, 0); levels];
        let mut pre_film = vec![Tensor::zeros(0, 0, 0); levels];
        let mut dec_in = vec![Tensor::zeros(0, 0, 0); levels.saturating_sub(1)];

        let mut modulate = |k: usize, f: Tensor, coeff_in: &mut Vec<Tensor>| -> Tensor {
            if !cfg.film {
                pre_film[k] = f.clone();
                return f;
            }
            let a = self.attention_tensor(attention, k, cfg.attention_gain);
            let (hidden, gamma, beta) = self.coefficients(k, &a);
            let out = nn::film_modulate(&f, &gamma, &beta, strength);
            coeff_in[k] = a;
            coeff_hidden[k] = hidden;
            gammas[k] = gamma;
            pre_film[k] = f;
            out
        };

        let mut d = modulate(levels - 1, skips[levels - 1].clone(), &mut coeff_in);
        for k in (0..levels - 1).rev() {
            let up = nn::upsample2(&d);
            let cat = Tensor::concat_channels(&[&up, &skips[k]]);
            let f = nn::leaky_relu(&self.decoder[k].forward(&self.params, &cat));
            dec_in[k] = cat;
            d = modulate(k, f, &mut coeff_in);
        }

        let z = self.output.forward(&self.params, &d);
        let eps = cfg.epsilon_f32();
        let mut tanh_out = z;
        for v in &mut tanh_out.data {
            *v = v.tanh();
        }
        let mut delta = tanh_out.clone();
        for v in &mut delta.data {
            *v *= eps;
        }
        let cache = ForwardCache {
            enc_in,
            enc_a,
            skips,
            coeff_in,
            coeff_hidden,
            gammas,
            pre_film,
            dec_in,
            out_in: d,
            tanh_out,
        };
        Ok((delta, cache))
    }

    /// Accumulates `∂L/∂φ` into `grads` given `∂L/∂δ`.
    pub fn backward(&self, cache: &ForwardCache, grad_delta: &Tensor, grads: &mut [f32]) {
        assert_eq!(grads.len(), self.params.len());
        let cfg = &self.config;
        let levels = cfg.levels;
        let strength = cfg.strength_s as f32;
        let eps = cfg.epsilon_f32();

        let mut gz = grad_delta.clone();
        for (g, t) in gz.data.iter_mut().zip(&cache.tanh_out.data) {
            *g *= eps * (1.0 - t * t);
        }
        let mut g_d = self
            .output
            .backward(&self.params, &cache.out_in, &gz, grads, true)
            .unwrap();

        let mut g_skips: Vec<Option<Tensor>> = vec![None; levels];
        let add_into = |slot: &mut Option<Tensor>, g: Tensor| match slot {
            Some(acc) => {
                for (a, b) in acc.data.iter_mut().zip(&g.data) {
                    *a += b;
                }
            }
            None => *slot = Some(g),
        };

        // Undo the modulation at level k, returning the gradient of its input features.
        let unmodulate = |k: usize, g: Tensor, grads: &mut [f32]| -> Tensor {
            if !cfg.film {
                return g;
            }
            let (gf, gg, gb) = nn::film_backward(&cache.pre_film[k], &cache.gammas[k], &g, strength);
            let net = &self.coeff_nets[k];
            let g_coeffs = Tensor::concat_channels(&[&gg, &gb]);
            let mut g_hidden = net
                .head
                .backward(&self.params, &cache.coeff_hidden[k], &g_coeffs, grads, true)
                .unwrap();
            nn::leaky_relu_backward(&cache.coeff_hidden[k], &mut g_hidden);
            net.hidden
                .backward(&self.params, &cache.coeff_in[k], &g_hidden, grads, false);
            gf
        };

        for k in 0..levels - 1 {
            let mut g_f = unmodulate(k, g_d, grads);
            nn::leaky_relu_backward(&cache.pre_film[k], &mut g_f);
            let g_cat = self.decoder[k]
                .backward(&self.params, &cache.dec_in[k], &g_f, grads, true)
                .unwrap();
            let up_c = self.config.channels(k + 1);
            let mut parts = g_cat.split_channels(&[up_c, self.config.channels(k)]).into_iter();
            let g_up = parts.next().unwrap();
            add_into(&mut g_skips[k], parts.next().unwrap());
            g_d = nn::upsample2_backward(&g_up);
        }
        let g_bottom = unmodulate(levels - 1, g_d, grads);
        add_into(&mut g_skips[levels - 1], g_bottom);

        for k in (0..levels).rev() {
            let block = &self.encoder[k];
            let mut g = g_skips[k].take().expect("every skip receives a gradient");
            nn::leaky_relu_backward(&cache.skips[k], &mut g);
            let mut g_a = block
                .conv_b
                .backward(&self.params, &cache.enc_a[k], &g, grads, true)
                .unwrap();
            nn::leaky_relu_backward(&cache.enc_a[k], &mut g_a);
            let g_in = block
                .conv_a
                .backward(&self.params, &cache.enc_in[k], &g_a, grads, k > 0);
            if let Some(g_in) = g_in {
                let prev = &cache.skips[k - 1];
                add_into(
                    &mut g_skips[k - 1],
                    nn::avg_pool2_backward(&g_in, prev.height, prev.width),
                );
            }
        }
    }

    pub fn weights_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update(p.to_le_bytes());
        }
        hex_digest(h.finalize().as_slice())
    }

    pub fn to_checkpoint(&self, training_meta: Option<TrainingMeta>) -> GeneratorCheckpoint {
        GeneratorCheckpoint {
            config: self.config.clone(),
            training_meta,
            weights: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &GeneratorCheckpoint) -> Result<Self> {
        let mut g = Self::new(ckpt.config.clone())?;
        if g.params.len() != ckpt.weights.len() {
            return Err(Error::Shape(format!(
                "checkpoint holds {} weights, architecture needs {}",
                ckpt.weights.len(),
                g.params.len()
            )));
        }
        g.params.copy_from_slice(&ckpt.weights);
        Ok(g)
    }
}

/// `x_adv = clip(x + δ, 0, 1)`.
pub fn apply_perturbation(x: &Image, delta: &Tensor) -> Result<Image> {
    if delta.channels != 3 || delta.height != x.height() || delta.width != x.width() {
        return Err(Error::Shape(format!(
            "perturbation {}x{}x{} does not match image {}",
            delta.height, delta.width, delta.channels, x.shape()
        )));
    }
    let mut out = x.clone();
    for (o, d) in out.data_mut().iter_mut().zip(&delta.data) {
        *o = (*o + d).clamp(0.0, 1.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub alpha: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lp_ceiling: Option<f64>,
    pub dataset_hash: String,
    pub surrogate_id: String,
}

/// Generator weights plus the metadata needed to rebuild and audit them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCheckpoint {
    pub config: GeneratorConfig,
    pub training_meta: Option<TrainingMeta>,
    pub weights: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointSidecar {
    format_version: u32,
    config: GeneratorConfig,
    training_meta: Option<TrainingMeta>,
    num_weights: usize,
    weights_file: String,
    weights_sha256: String,
}

impl GeneratorCheckpoint {
    /// Writes `<path>` (JSON sidecar) and `<path minus .json>.bin` (little-endian f32).
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        let blob_path = path.with_extension("bin");
        let mut bytes = Vec::with_capacity(self.weights.len() * 4);
        for w in &self.weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        let sha = hex_digest(Sha256::digest(&bytes).as_slice());
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        std::fs::write(&blob_path, &bytes).map_err(|e| Error::io(&blob_path, e))?;
        let sidecar = CheckpointSidecar {
            format_version: CHECKPOINT_FORMAT_VERSION,
            config: self.config.clone(),
            training_meta: self.training_meta.clone(),
            num_weights: self.weights.len(),
            weights_file: blob_path
                .file_name()
                .unwrap()
                .to_string_lossy()
                .into_owned(),
            weights_sha256: sha,
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::json("checkpoint", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        Ok(blob_path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sidecar: CheckpointSidecar =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        if sidecar.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                what: path.display().to_string(),
                expected: CHECKPOINT_FORMAT_VERSION,
                found: sidecar.format_version,
            });
        }
        let blob_path = path.with_file_name(&sidecar.weights_file);
        let bytes = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        if hex_digest(Sha256::digest(&bytes).as_slice()) != sidecar.weights_sha256
            || bytes.len() != sidecar.num_weights * 4
        {
            return Err(Error::Checksum(blob_path));
        }
        let weights = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            config: sidecar.config,
            training_meta: sidecar.training_meta,
            weights,
        })
    }
}
