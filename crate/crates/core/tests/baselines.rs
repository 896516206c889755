mod common;

use std::f64::consts::PI;

use pixveil::baselines::{
    attention_gate, blur_region, mask_region, mosaic_region, occlude, Method, OcclusionParams, PixelMask,
};
use pixveil::saliency::AttentionMap;
use pixveil::{Image, ImageShape};
use proptest::prelude::*;

/// Spectral energy of one channel of a square crop at frequencies whose
/// larger index magnitude is at least `cutoff`, by direct DFT.
fn high_frequency_energy(x: &Image, c: usize, top: usize, left: usize, n: usize, cutoff: usize) -> f64 {
    let mut e = 0.0;
    for u in 0..n {
        for v in 0..n {
            let fu = u.min(n - u);
            let fv = v.min(n - v);
            if fu.max(fv) < cutoff {
                continue;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..n {
                for xx in 0..n {
                    let phase = -2.0 * PI * ((u * y) as f64 / n as f64 + (v * xx) as f64 / n as f64);
                    let p = x.get(c, top + y, left + xx) as f64;
                    re += p * phase.cos();
                    im += p * phase.sin();
                }
            }
            e += re * re + im * im;
        }
    }
    e
}

fn hot_square(shape: ImageShape, top: usize, left: usize, side: usize) -> AttentionMap {
    let mut v = vec![0.0; shape.pixels()];
    for y in top..top + side {
        for x in left..left + side {
            v[y * shape.width + x] = 1.0 + ((y * 7 + x * 3) % 5) as f64;
        }
    }
    AttentionMap::new(shape, v).unwrap()
}

fn random_mask(shape: ImageShape, seed: u64) -> PixelMask {
    let img = common::random_image(shape, seed, 0.0, 1.0);
    let mut m = PixelMask::empty(shape);
    for y in 0..shape.height {
        for x in 0..shape.width {
            m.values[y * shape.width + x] = img.get(0, y, x) > 0.6;
        }
    }
    m
}

#[test]
fn gate_of_zero_attention_is_empty() {
    let a = AttentionMap::zeros(ImageShape::new(6, 6));
    assert_eq!(attention_gate(&a, 0.5).unwrap().count(), 0);
}

#[test]
fn gate_with_tiny_quantile_keeps_all_positive_pixels() {
    let shape = ImageShape::new(10, 10);
    let a = hot_square(shape, 2, 3, 4);
    let m = attention_gate(&a, 1e-9).unwrap();
    for (i, v) in a.values.iter().enumerate() {
        assert_eq!(m.values[i], *v > 0.0);
    }
}

#[test]
fn gate_of_hot_square_stays_inside_it() {
    let shape = ImageShape::new(16, 16);
    let a = hot_square(shape, 5, 7, 4);
    let m = attention_gate(&a, 0.5).unwrap();
    assert!(m.count() > 0);
    let (y0, x0, y1, x1) = m.bounding_box().unwrap();
    assert!(y0 >= 5 && x0 >= 7 && y1 <= 9 && x1 <= 11);
}

#[test]
fn gate_rejects_out_of_range_quantiles() {
    let a = AttentionMap::zeros(ImageShape::new(2, 2));
    for q in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(attention_gate(&a, q).is_err());
    }
}

#[test]
fn empty_mask_is_identity_for_every_method() {
    let x = common::random_image(ImageShape::new(12, 12), 1, 0.0, 1.0);
    let m = PixelMask::empty(x.shape());
    assert_eq!(blur_region(&x, &m, 3).unwrap(), x);
    assert_eq!(mosaic_region(&x, &m, 4).unwrap(), x);
    assert_eq!(mask_region(&x, &m, 0.5).unwrap(), x);
}

#[test]
fn constant_image_survives_blur() {
    let x = Image::filled(ImageShape::new(20, 20), [0.3, 0.6, 0.9]);
    for r in [1, 3, 8] {
        let out = blur_region(&x, &PixelMask::full(x.shape()), r).unwrap();
        for (a, b) in out.data().iter().zip(x.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
}

#[test]
fn blur_removes_high_frequency_energy() {
    let (x, rec) = common::fixture(5);
    let r = rec.pii[0].glyph_region;
    let n = 32;
    let (top, left) = (r.y.min(x.height() - n), r.x.min(x.width() - n));
    let blurred = blur_region(&x, &PixelMask::full(x.shape()), 8).unwrap();
    for c in 0..3 {
        let before = high_frequency_energy(&x, c, top, left, n, 4);
        let after = high_frequency_energy(&blurred, c, top, left, n, 4);
        assert!(after < before, "channel {c}: {after} vs {before}");
    }
}

#[test]
fn mask_with_zero_fill_zeroes_masked_pixels() {
    let x = common::random_image(ImageShape::new(9, 9), 2, 0.1, 1.0);
    let m = random_mask(x.shape(), 3);
    let out = mask_region(&x, &m, 0.0).unwrap();
    for y in 0..9 {
        for xx in 0..9 {
            if m.get(y, xx) {
                assert_eq!(out.rgb(y, xx), [0.0; 3]);
            }
        }
    }
    assert!(mask_region(&x, &m, 1.5).is_err());
}

#[test]
fn mosaic_with_large_block_averages_the_region() {
    let x = common::random_image(ImageShape::new(10, 10), 4, 0.0, 1.0);
    let mut m = PixelMask::empty(x.shape());
    for y in 2..6 {
        for xx in 3..8 {
            m.values[y * 10 + xx] = true;
        }
    }
    let out = mosaic_region(&x, &m, 16).unwrap();
    for c in 0..3 {
        let mut s = 0.0f64;
        for y in 2..6 {
            for xx in 3..8 {
                s += x.get(c, y, xx) as f64;
            }
        }
        let mean = (s / 20.0) as f32;
        for y in 2..6 {
            for xx in 3..8 {
                assert_eq!(out.get(c, y, xx), mean);
            }
        }
    }
    assert!(mosaic_region(&x, &m, 1).is_err());
    assert!(blur_region(&x, &m, 0).is_err());
}

#[test]
fn gated_methods_require_attention_and_dualtap_is_not_an_occlusion() {
    let x = common::random_image(ImageShape::new(8, 8), 5, 0.0, 1.0);
    let p = OcclusionParams::default();
    assert!(occlude(Method::MaskAtten, &x, None, &p).is_err());
    assert!(occlude(Method::DualTap, &x, None, &p).is_err());
    assert!(occlude(Method::Mask, &x, None, &p).is_ok());
}

#[test]
fn defaults_match_the_documented_values() {
    let p = OcclusionParams::default();
    assert_eq!((p.gate_quantile, p.blur_radius, p.mosaic_block, p.fill), (0.8, 8, 16, 0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unmasked_pixels_are_bit_identical(seed in any::<u64>(), method in 0usize..3, param in 1usize..6) {
        let shape = ImageShape::new(14, 11);
        let x = common::random_image(shape, seed, 0.0, 1.0);
        let m = random_mask(shape, seed ^ 9);
        let out = match method {
            0 => blur_region(&x, &m, param).unwrap(),
            1 => mosaic_region(&x, &m, param + 1).unwrap(),
            _ => mask_region(&x, &m, param as f32 / 6.0).unwrap(),
        };
        for y in 0..shape.height {
            for xx in 0..shape.width {
                if !m.get(y, xx) {
                    for c in 0..3 {
                        prop_assert_eq!(out.get(c, y, xx).to_bits(), x.get(c, y, xx).to_bits());
                    }
                }
            }
        }
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gated_occlusion_only_touches_the_gate(seed in any::<u64>(), m in 0usize..3) {
        let shape = ImageShape::new(16, 16);
        let x = common::random_image(shape, seed, 0.0, 1.0);
        let a = hot_square(shape, (seed % 8) as usize, (seed / 8 % 8) as usize, 6);
        let method = [Method::BlurAtten, Method::MosaicAtten, Method::MaskAtten][m];
        let p = OcclusionParams::default();
        let gate = attention_gate(&a, p.gate_quantile).unwrap();
        let out = occlude(method, &x, Some(&a), &p).unwrap();
        for y in 0..16 {
            for xx in 0..16 {
                if !gate.get(y, xx) {
                    prop_assert_eq!(out.rgb(y, xx), x.rgb(y, xx));
                }
            }
        }
    }
}
