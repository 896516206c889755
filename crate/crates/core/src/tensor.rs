//! Planar (channel-major) `f32` tensors and the RGB [`Image`] built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `channels × height × width` array stored plane by plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "buffer of {} values cannot hold {}x{}x{}",
                data.len(),
                channels,
                height,
                width
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_spatial(&self, other: &Tensor) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Stacks channel planes of `parts` in order.
    pub fn concat_channels(parts: &[&Tensor]) -> Tensor {
        let (h, w) = (parts[0].height, parts[0].width);
        let channels = parts.iter().map(|t| t.channels).sum();
        let mut data = Vec::with_capacity(channels * h * w);
        for p in parts {
            debug_assert!(p.height == h && p.width == w);
            data.extend_from_slice(&p.data);
        }
        Tensor {
            channels,
            height: h,
            width: w,
            data,
        }
    }

    /// Splits channels into consecutive groups of the given sizes.
    pub fn split_channels(&self, sizes: &[usize]) -> Vec<Tensor> {
        let n = self.plane_len();
        let mut out = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &c in sizes {
            out.push(Tensor {
                channels: c,
                height: self.height,
                width: self.width,
                data: self.data[start * n..(start + c) * n].to_vec(),
            });
            start += c;
        }
        out
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

/// Spatial size of an image, rows first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub const fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

impl std::fmt::Display for ImageShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x3", self.height, self.width)
    }
}

/// An RGB image with intensities in `[0, 1]`, stored as three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    inner: Tensor,
}

impl Image {
    pub fn filled(shape: ImageShape, rgb: [f32; 3]) -> Self {
        let mut inner = Tensor::zeros(3, shape.height, shape.width);
        for (c, v) in rgb.iter().enumerate() {
            inner.plane_mut(c).fill(*v);
        }
        Self { inner }
    }

    pub fn zeros(shape: ImageShape) -> Self {
        Self::filled(shape, [0.0; 3])
    }

    pub fn from_tensor(t: Tensor) -> Result<Self> {
        if t.channels != 3 {
            return Err(Error::Shape(format!(
                "an image needs 3 channels, got {}",
                t.channels
            )));
        }
        Ok(Self { inner: t })
    }

    pub fn from_planar(shape: ImageShape, data: Vec<f32>) -> Result<Self> {
        Self::from_tensor(Tensor::from_vec(3, shape.height, shape.width, data)?)
    }

    pub fn shape(&self) -> ImageShape {
        ImageShape::new(self.inner.height, self.inner.width)
    }

    pub fn height(&self) -> usize {
        self.inner.height
    }

    pub fn width(&self) -> usize {
        self.inner.width
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.inner
    }

    pub fn into_tensor(self) -> Tensor {
        self.inner
    }

    pub fn data(&self) -> &[f32] {
        &self.inner.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.inner.data
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.inner.height + y) * self.inner.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.inner.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        let i = self.index(c, y, x);
        self.inner.data[i] = v;
    }

    pub fn set_rgb(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        for (c, v) in rgb.iter().enumerate() {
            self.set(c, y, x, *v);
        }
    }

    pub fn rgb(&self, y: usize, x: usize) -> [f32; 3] {
        [self.get(0, y, x), self.get(1, y, x), self.get(2, y, x)]
    }

    /// Checks that every value is finite and lies in `[0, 1]`.
    pub fn validate_range(&self) -> Result<()> {
        match self
            .inner
            .data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            None => Ok(()),
            Some(i) => Err(Error::InvalidInput(format!(
                "pixel {} has value {} outside [0, 1]",
                i, self.inner.data[i]
            ))),
        }
    }

    /// Hex SHA-256 over the raw little-endian pixel bytes.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.height() as u64).to_le_bytes());
        h.update((self.width() as u64).to_le_bytes());
        for v in &self.inner.data {
            h.update(v.to_le_bytes());
        }
        hex_digest(h.finalize().as_slice())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_then_split_restores_parts() {
        let a = Tensor::from_vec(1, 2, 2, vec![1., 2., 3., 4.]).unwrap();
        let b = Tensor::from_vec(2, 2, 2, (0..8).map(|v| v as f32).collect()).unwrap();
        let c = Tensor::concat_channels(&[&a, &b]);
        assert_eq!(c.channels, 3);
        let parts = c.split_channels(&[1, 2]);
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn image_rejects_wrong_channel_count() {
        assert!(Image::from_tensor(Tensor::zeros(4, 2, 2)).is_err());
    }

    #[test]
    fn range_validation_names_the_pixel() {
        let mut img = Image::zeros(ImageShape::new(2, 2));
        img.set(1, 0, 1, 1.5);
        let err = img.validate_range().unwrap_err().to_string();
        assert!(err.contains("1.5"), "{err}");
    }
}
