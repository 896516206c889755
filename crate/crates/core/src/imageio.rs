//! PNG reading and writing.

use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::tensor::{Image, ImageShape};

fn codec(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Codec {
            path: path.to_path_buf(),
            source: other,
        },
    }
}

/// Loads any PNG as RGB with values `k / 255`.
pub fn load_png(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| codec(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let shape = ImageShape::new(h as usize, w as usize);
    let mut out = Image::zeros(shape);
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            out.set(c, y as usize, x as usize, px.0[c] as f32 / 255.0);
        }
    }
    Ok(out)
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit RGB PNG, rounding each value to the nearest level.
pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let buf = ImageBuffer::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        let [r, g, b] = img.rgb(y as usize, x as usize);
        Rgb([to_u8(r), to_u8(g), to_u8(b)])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| codec(path, e))
}

/// PNG bytes of an 8-bit RGB encoding.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let buf = ImageBuffer::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        let [r, g, b] = img.rgb(y as usize, x as usize);
        Rgb([to_u8(r), to_u8(g), to_u8(b)])
    });
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| codec(Path::new("<memory>"), e))?;
    Ok(out.into_inner())
}

/// Rounds `adv` to 8-bit levels without leaving `[x − ε, x + ε]`.
pub fn quantize_within(x: &Image, adv: &Image, epsilon: f64) -> Image {
    let mut out = adv.clone();
    for (o, base) in out.data_mut().iter_mut().zip(x.data()) {
        let mut q = (o.clamp(0.0, 1.0) * 255.0).round();
        let b = *base as f64 * 255.0;
        let e = epsilon * 255.0;
        if (q as f64) > b + e + 1e-6 {
            q -= 1.0;
        } else if (q as f64) < b - e - 1e-6 {
            q += 1.0;
        }
        *o = q / 255.0;
    }
    out
}

/// Writes one plane as a 16-bit grayscale PNG, scaling `[0, max]` to the full range.
pub fn save_gray16(values: &[f64], shape: ImageShape, path: &Path) -> Result<()> {
    if values.len() != shape.pixels() {
        return Err(Error::Shape("heatmap length does not match its shape".into()));
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let buf = ImageBuffer::from_fn(shape.width as u32, shape.height as u32, |x, y| {
        let v = values[y as usize * shape.width + x as usize];
        let s = if max > 0.0 { (v / max).clamp(0.0, 1.0) } else { 0.0 };
        Luma([(s * 65535.0).round() as u16])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| codec(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_bit_images_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let shape = ImageShape::new(3, 5);
        let data = (0..45).map(|i| ((i * 17) % 256) as f32 / 255.0).collect();
        let img = Image::from_planar(shape, data).unwrap();
        save_png(&img, &p).unwrap();
        assert_eq!(load_png(&p).unwrap(), img);
    }

    #[test]
    fn quantization_respects_the_bound() {
        let shape = ImageShape::new(1, 4);
        let x = Image::from_planar(shape, vec![10.0 / 255.0; 12]).unwrap();
        let eps = 2.3 / 255.0;
        let adv = Image::from_planar(shape, vec![(10.0 + 2.3) / 255.0; 12]).unwrap();
        let q = quantize_within(&x, &adv, eps);
        for (a, b) in q.data().iter().zip(x.data()) {
            assert!((a - b).abs() as f64 <= eps + 1e-7);
        }
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_png(Path::new("/nonexistent/x.png")).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/x.png"), "{err}");
    }
}
