//! Occlusion baselines (blur, mosaic, mask), optionally restricted to the
//! high-attention region.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saliency::AttentionMap;
use crate::tensor::{Image, ImageShape};

pub const GATE_QUANTILE_DEFAULT: f64 = 0.8;
pub const BLUR_RADIUS_DEFAULT: usize = 8;
pub const MOSAIC_BLOCK_DEFAULT: usize = 16;
pub const MASK_FILL_DEFAULT: f32 = 0.5;

/// Binary pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    pub height: usize,
    pub width: usize,
    pub values: Vec<bool>,
}

impl PixelMask {
    pub fn empty(shape: ImageShape) -> Self {
        Self {
            height: shape.height,
            width: shape.width,
            values: vec![false; shape.pixels()],
        }
    }

    pub fn full(shape: ImageShape) -> Self {
        Self {
            height: shape.height,
            width: shape.width,
            values: vec![true; shape.pixels()],
        }
    }

    pub fn shape(&self) -> ImageShape {
        ImageShape::new(self.height, self.width)
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    /// Smallest `(y0, x0, y1, x1)` (exclusive ends) containing every set pixel.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(y, x) {
                    bb = Some(match bb {
                        None => (y, x, y + 1, x + 1),
                        Some((y0, x0, y1, x1)) => (y0.min(y), x0.min(x), y1.max(y + 1), x1.max(x + 1)),
                    });
                }
            }
        }
        bb
    }

    fn check(&self, x: &Image) -> Result<()> {
        if self.shape() != x.shape() {
            return Err(Error::Shape(format!(
                "mask {}x{} does not match image {}",
                self.height,
                self.width,
                x.shape()
            )));
        }
        Ok(())
    }
}

/// Marks pixels whose attention reaches the nearest-rank `quantile` of the
/// strictly positive attention values.
pub fn attention_gate(attention: &AttentionMap, quantile: f64) -> Result<PixelMask> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidInput(format!(
            "gate quantile must lie in (0, 1), got {quantile}"
        )));
    }
    let mut positive: Vec<f64> = attention.values.iter().copied().filter(|v| *v > 0.0).collect();
    let mut mask = PixelMask::empty(attention.shape());
    if positive.is_empty() {
        return Ok(mask);
    }
    positive.sort_by(f64::total_cmp);
    let rank = ((quantile * positive.len() as f64).ceil() as usize).clamp(1, positive.len());
    let threshold = positive[rank - 1];
    for (m, v) in mask.values.iter_mut().zip(&attention.values) {
        *m = *v > 0.0 && *v >= threshold;
    }
    Ok(mask)
}

fn gaussian_kernel(radius: usize) -> Vec<f32> {
    let sigma = radius as f64 / 2.0;
    let w: Vec<f64> = (-(radius as i64)..=radius as i64)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter().map(|v| (v / sum) as f32).collect()
}

/// Separable Gaussian blur with `σ = radius / 2` and replicated edges.
pub fn gaussian_blur(x: &Image, radius: usize) -> Image {
    let k = gaussian_kernel(radius);
    let r = radius as i64;
    let (h, w) = (x.height() as i64, x.width() as i64);
    let mut tmp = x.clone();
    let mut out = x.clone();
    for c in 0..3 {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = 0.0f32;
                for (i, kv) in k.iter().enumerate() {
                    let sx = (xx + i as i64 - r).clamp(0, w - 1);
                    acc += kv * x.get(c, y as usize, sx as usize);
                }
                tmp.set(c, y as usize, xx as usize, acc);
            }
        }
        for y in 0..h {
            for xx in 0..w {
                let mut acc = 0.0f32;
                for (i, kv) in k.iter().enumerate() {
                    let sy = (y + i as i64 - r).clamp(0, h - 1);
                    acc += kv * tmp.get(c, sy as usize, xx as usize);
                }
                out.set(c, y as usize, xx as usize, acc.clamp(0.0, 1.0));
            }
        }
    }
    out
}

/// Gaussian blur where the mask is set; other pixels are copied unchanged.
pub fn blur_region(x: &Image, mask: &PixelMask, radius: usize) -> Result<Image> {
    mask.check(x)?;
    if radius == 0 {
        return Err(Error::InvalidInput("blur radius must be at least 1".into()));
    }
    if mask.count() == 0 {
        return Ok(x.clone());
    }
    let blurred = gaussian_blur(x, radius);
    Ok(select(x, &blurred, mask))
}

fn select(x: &Image, replacement: &Image, mask: &PixelMask) -> Image {
    let mut out = x.clone();
    for c in 0..3 {
        for y in 0..x.height() {
            for xx in 0..x.width() {
                if mask.get(y, xx) {
                    out.set(c, y, xx, replacement.get(c, y, xx));
                }
            }
        }
    }
    out
}

/// Replaces masked pixels of each `block × block` grid cell by the mean of
/// the masked pixels in that cell.
pub fn mosaic_region(x: &Image, mask: &PixelMask, block: usize) -> Result<Image> {
    mask.check(x)?;
    if block < 2 {
        return Err(Error::InvalidInput("mosaic block must be at least 2".into()));
    }
    let mut out = x.clone();
    for by in (0..x.height()).step_by(block) {
        for bx in (0..x.width()).step_by(block) {
            let ys = by..(by + block).min(x.height());
            let xs = bx..(bx + block).min(x.width());
            let mut sum = [0.0f64; 3];
            let mut n = 0usize;
            for y in ys.clone() {
                for xx in xs.clone() {
                    if mask.get(y, xx) {
                        for (c, s) in sum.iter_mut().enumerate() {
                            *s += x.get(c, y, xx) as f64;
                        }
                        n += 1;
                    }
                }
            }
            if n == 0 {
                continue;
            }
            let mean = sum.map(|s| (s / n as f64) as f32);
            for y in ys.clone() {
                for xx in xs.clone() {
                    if mask.get(y, xx) {
                        out.set_rgb(y, xx, mean);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sets masked pixels to `fill` in every channel.
pub fn mask_region(x: &Image, mask: &PixelMask, fill: f32) -> Result<Image> {
    mask.check(x)?;
    if !(0.0..=1.0).contains(&fill) {
        return Err(Error::InvalidInput(format!("fill must lie in [0, 1], got {fill}")));
    }
    let mut out = x.clone();
    for y in 0..x.height() {
        for xx in 0..x.width() {
            if mask.get(y, xx) {
                out.set_rgb(y, xx, [fill; 3]);
            }
        }
    }
    Ok(out)
}

/// Every protection method selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dualtap")]
    DualTap,
    #[serde(rename = "blur")]
    Blur,
    #[serde(rename = "blur+atten")]
    BlurAtten,
    #[serde(rename = "mosaic")]
    Mosaic,
    #[serde(rename = "mosaic+atten")]
    MosaicAtten,
    #[serde(rename = "mask")]
    Mask,
    #[serde(rename = "mask+atten")]
    MaskAtten,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::DualTap,
        Method::Blur,
        Method::BlurAtten,
        Method::Mosaic,
        Method::MosaicAtten,
        Method::Mask,
        Method::MaskAtten,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DualTap => "dualtap",
            Method::Blur => "blur",
            Method::BlurAtten => "blur+atten",
            Method::Mosaic => "mosaic",
            Method::MosaicAtten => "mosaic+atten",
            Method::Mask => "mask",
            Method::MaskAtten => "mask+atten",
        }
    }

    pub fn uses_attention(self) -> bool {
        matches!(
            self,
            Method::DualTap | Method::BlurAtten | Method::MosaicAtten | Method::MaskAtten
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown protection method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcclusionParams {
    pub gate_quantile: f64,
    pub blur_radius: usize,
    pub mosaic_block: usize,
    pub fill: f32,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self {
            gate_quantile: GATE_QUANTILE_DEFAULT,
            blur_radius: BLUR_RADIUS_DEFAULT,
            mosaic_block: MOSAIC_BLOCK_DEFAULT,
            fill: MASK_FILL_DEFAULT,
        }
    }
}

/// Applies an occlusion method; `attention` is required for the gated variants.
pub fn occlude(
    method: Method,
    x: &Image,
    attention: Option<&AttentionMap>,
    params: &OcclusionParams,
) -> Result<Image> {
    let mask = if method.uses_attention() {
        let a = attention.ok_or_else(|| {
            Error::InvalidInput(format!("method {method} needs an attention map"))
        })?;
        attention_gate(a, params.gate_quantile)?
    } else {
        PixelMask::full(x.shape())
    };
    match method {
        Method::Blur | Method::BlurAtten => blur_region(x, &mask, params.blur_radius),
        Method::Mosaic | Method::MosaicAtten => mosaic_region(x, &mask, params.mosaic_block),
        Method::Mask | Method::MaskAtten => mask_region(x, &mask, params.fill),
        Method::DualTap => Err(Error::InvalidInput(
            "dualtap is a generator method, not an occlusion".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(3);
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        assert_eq!(k[0], k[6]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
    }

    #[test]
    fn gated_methods_need_attention() {
        let x = Image::zeros(ImageShape::new(4, 4));
        assert!(occlude(Method::MaskAtten, &x, None, &OcclusionParams::default()).is_err());
        assert!(occlude(Method::Mask, &x, None, &OcclusionParams::default()).is_ok());
    }
}
