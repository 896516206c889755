//! Gradient saliency, contrastive attention and the attention pyramid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qa::{QaKind, QaPair};
use crate::surrogate::{self, SurrogateModel};
use crate::tensor::{Image, ImageShape};

/// `|∂NLL/∂x|` for one QA set, stored as three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub source_kind: QaKind,
}

impl SaliencyMap {
    pub fn new(shape: ImageShape, values: Vec<f64>, source_kind: QaKind) -> Result<Self> {
        if values.len() != 3 * shape.pixels() {
            return Err(Error::Shape(format!(
                "saliency for {shape} needs {} values, got {}",
                3 * shape.pixels(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!("saliency value {v} is negative")));
        }
        Ok(Self {
            height: shape.height,
            width: shape.width,
            values,
            source_kind,
        })
    }

    pub fn shape(&self) -> ImageShape {
        ImageShape::new(self.height, self.width)
    }

    /// Per-pixel mean over the three channels.
    pub fn channel_mean(&self) -> Vec<f64> {
        let n = self.height * self.width;
        (0..n)
            .map(|i| (self.values[i] + self.values[n + i] + self.values[2 * n + i]) / 3.0)
            .collect()
    }
}

pub fn saliency_map(
    model: &dyn SurrogateModel,
    x: &Image,
    qa: &[QaPair],
    kind: QaKind,
) -> Result<SaliencyMap> {
    let grad = surrogate::input_gradient(model, x, qa)?;
    SaliencyMap::new(x.shape(), grad.into_iter().map(f64::abs).collect(), kind)
}

/// One single-channel resolution level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionLevel {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl AttentionLevel {
    pub fn shape(&self) -> ImageShape {
        ImageShape::new(self.height, self.width)
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

/// Single-channel non-negative map plus its downsampled pyramid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub pyramid: Vec<AttentionLevel>,
}

impl AttentionMap {
    pub fn new(shape: ImageShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.pixels() {
            return Err(Error::Shape(format!(
                "attention for {}x{} needs {} values, got {}",
                shape.height,
                shape.width,
                shape.pixels(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "attention value {v} is negative or non-finite"
            )));
        }
        Ok(Self {
            height: shape.height,
            width: shape.width,
            values,
            pyramid: Vec::new(),
        })
    }

    pub fn zeros(shape: ImageShape) -> Self {
        Self {
            height: shape.height,
            width: shape.width,
            values: vec![0.0; shape.pixels()],
            pyramid: Vec::new(),
        }
    }

    pub fn shape(&self) -> ImageShape {
        ImageShape::new(self.height, self.width)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn build_pyramid(mut self, level_shapes: &[ImageShape]) -> Result<Self> {
        if level_shapes.is_empty() {
            return Err(Error::InvalidInput("pyramid needs at least one level".into()));
        }
        let mut pyramid = Vec::with_capacity(level_shapes.len());
        for s in level_shapes {
            if s.height == 0 || s.width == 0 || s.height > self.height || s.width > self.width {
                return Err(Error::Shape(format!(
                    "cannot area-downsample {}x{} to {}x{}",
                    self.height, self.width, s.height, s.width
                )));
            }
            pyramid.push(AttentionLevel {
                height: s.height,
                width: s.width,
                values: area_resample(&self.values, self.height, self.width, s.height, s.width),
            });
        }
        self.pyramid = pyramid;
        Ok(self)
    }

    /// Copy divided by its maximum, for display only.
    pub fn normalized_for_display(&self) -> Vec<f64> {
        normalize_by_max(&self.values)
    }
}

/// Divides by the maximum; a map whose maximum is below 1e-12 stays zero.
pub fn normalize_by_max(values: &[f64]) -> Vec<f64> {
    let m = values.iter().fold(0.0f64, |m, v| m.max(*v));
    if m < 1e-12 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| v / m).collect()
    }
}

/// `A = ReLU(mean_c S_p − mean_c S_n)`.
pub fn contrastive_attention(privacy: &SaliencyMap, normal: &SaliencyMap) -> Result<AttentionMap> {
    if privacy.shape() != normal.shape() {
        return Err(Error::Shape(format!(
            "privacy saliency {} vs normal saliency {}",
            privacy.shape(),
            normal.shape()
        )));
    }
    let sp = privacy.channel_mean();
    let sn = normal.channel_mean();
    let values = sp
        .iter()
        .zip(&sn)
        .map(|(p, n)| if p > n { p - n } else { 0.0 })
        .collect();
    AttentionMap::new(privacy.shape(), values)
}

/// Single-channel form of [`contrastive_attention`], used when maps are already aggregated.
pub fn contrastive_attention_plane(
    shape: ImageShape,
    privacy: &[f64],
    normal: &[f64],
) -> Result<AttentionMap> {
    if privacy.len() != shape.pixels() || normal.len() != shape.pixels() {
        return Err(Error::Shape("attention planes must match the shape".into()));
    }
    let values = privacy
        .iter()
        .zip(normal)
        .map(|(p, n)| if p > n { p - n } else { 0.0 })
        .collect();
    AttentionMap::new(shape, values)
}

/// Attention for one image from its privacy and normal QA sets.
pub fn attention_for(
    model: &dyn SurrogateModel,
    x: &Image,
    privacy: &[QaPair],
    normal: &[QaPair],
) -> Result<AttentionMap> {
    let sp = saliency_map(model, x, privacy, QaKind::Privacy)?;
    let sn = saliency_map(model, x, normal, QaKind::Normal)?;
    contrastive_attention(&sp, &sn)
}

/// Overlap weights mapping `n_in` cells onto `n_out` equal-width bins.
fn area_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let mut w = Vec::new();
            let mut i = lo.floor() as usize;
            while (i as f64) < hi && i < n_in {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((i, overlap / scale));
                }
                i += 1;
            }
            w
        })
        .collect()
}

fn area_resample(values: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    if oh == h && ow == w {
        return values.to_vec();
    }
    let wy = area_weights(h, oh);
    let wx = area_weights(w, ow);
    let mut rows = vec![0.0; oh * w];
    for (o, ws) in wy.iter().enumerate() {
        for &(i, a) in ws {
            for x in 0..w {
                rows[o * w + x] += a * values[i * w + x];
            }
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for (o, ws) in wx.iter().enumerate() {
            out[y * ow + o] = ws.iter().map(|&(i, a)| a * rows[y * w + i]).sum();
        }
    }
    out
}
