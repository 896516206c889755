#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use pixveil::privscreen_synth::{render_screenshot, sample_pii, SampleRecord, APP_TEMPLATES};
use pixveil::surrogate::{SurrogateModel, ToyGlyphSurrogate};
use pixveil::{Image, ImageShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIDE: usize = 128;

pub fn shape() -> ImageShape {
    ImageShape::new(SIDE, SIDE)
}

pub fn toy() -> Arc<dyn SurrogateModel> {
    static MODEL: OnceLock<Arc<dyn SurrogateModel>> = OnceLock::new();
    MODEL
        .get_or_init(|| Arc::new(ToyGlyphSurrogate::new(shape()).unwrap()))
        .clone()
}

/// A rendered screenshot with its annotations.
pub fn fixture(seed: u64) -> (Image, SampleRecord) {
    let t = &APP_TEMPLATES[(seed % APP_TEMPLATES.len() as u64) as usize];
    let pii = sample_pii(t, seed);
    render_screenshot(t, &pii, seed, shape()).unwrap()
}

pub fn random_image(shape: ImageShape, seed: u64, lo: f32, hi: f32) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.pixels() * 3).map(|_| rng.gen_range(lo..hi)).collect();
    Image::from_planar(shape, data).unwrap()
}

/// Mean of the squared 4-neighbour Laplacian over interior pixels.
pub fn laplacian_energy(x: &Image) -> f64 {
    let (h, w) = (x.height(), x.width());
    let mut e = 0.0;
    let mut n = 0usize;
    for c in 0..3 {
        for y in 1..h - 1 {
            for xx in 1..w - 1 {
                let v = 4.0 * x.get(c, y, xx)
                    - x.get(c, y - 1, xx)
                    - x.get(c, y + 1, xx)
                    - x.get(c, y, xx - 1)
                    - x.get(c, y, xx + 1);
                e += (v as f64).powi(2);
                n += 1;
            }
        }
    }
    e / n as f64
}
