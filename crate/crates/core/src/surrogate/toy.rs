//! A deterministic multimodal stand-in that reads screenshots pixel by pixel.
//!
//! Privacy questions are answered by a glyph reader: decode step `t` looks at
//! cell `t` of the slot that holds the asked PII kind and scores every
//! template by normalized cross-correlation, followed by a temperature
//! softmax. Normal questions are answered from pooled features: the mean
//! colour of the header band, and high-pass energy pooled over button and
//! field regions.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SurrogateModel, TokenId, Vocab, EOS_TOKEN};
use crate::error::{Error, Result};
use crate::font::{self, GLYPH_CHARS, GLYPH_SIZE};
use crate::screen::{self, GlyphSlot, PiiKind, Rect, ScreenLayout};
use crate::tensor::{hex_digest, Image, ImageShape};

pub const TOY_GLYPH_ID: &str = "toy-glyph-v1";
const FORMAT_VERSION: u32 = 1;
const FLOOR_LOGIT: f64 = -1.0e4;

/// Header colours the model can name, as 8-bit RGB.
pub const COLOR_WORDS: [(&str, [u8; 3]); 6] = [
    ("red", [200, 48, 48]),
    ("green", [40, 150, 70]),
    ("blue", [40, 90, 200]),
    ("orange", [235, 130, 30]),
    ("purple", [130, 60, 180]),
    ("teal", [20, 150, 150]),
];

pub const COUNT_WORDS: [&str; 6] = ["one", "two", "three", "four", "five", "six"];

/// Strings rendered once at construction to calibrate the field-count head.
const FIELD_CALIBRATION: [(PiiKind, &[&str]); 6] = [
    (PiiKind::Name, &["maria l chen", "james k olsen", "ana p silva", "robert t young"]),
    (PiiKind::Phone, &["555-201-7734", "555-868-4410", "555-317-9052"]),
    (PiiKind::Email, &["kim.lee@mail.com", "j.doe@post.net", "sara88@inbox.org"]),
    (PiiKind::CardNumber, &["4539 1488 0343 6467", "5205 7712 9034 1188"]),
    (PiiKind::Address, &["27 oak st", "1408 pine ave", "93 maple rd"]),
    (PiiKind::IdNumber, &["ab1234567", "zk9081726"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub glyph_temperature: f64,
    pub color_temperature: f64,
    pub count_temperature: f64,
    /// Added in quadrature to a cell's contrast norm, per layout unit.
    pub ncc_epsilon: f64,
    /// Mean high-pass energy of one button.
    pub button_energy: f64,
    /// Mean high-pass energy of a filled field window, per PII kind.
    pub field_energy: Vec<f64>,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self {
            glyph_temperature: 0.1,
            color_temperature: 0.02,
            count_temperature: 0.1,
            ncc_epsilon: 0.05,
            button_energy: 1.0,
            field_energy: vec![1.0; PiiKind::ALL.len()],
        }
    }
}

/// What a question asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Privacy(PiiKind),
    HeaderColor,
    ButtonCount,
    FieldCount,
}

impl Head {
    /// Keyword matching; layout questions are tried first.
    pub fn parse(question: &str) -> Option<Head> {
        let q = question.to_lowercase();
        let has = |w: &str| q.contains(w);
        if has("how many") && has("button") {
            return Some(Head::ButtonCount);
        }
        if has("how many") && (has("detail") || has("field")) {
            return Some(Head::FieldCount);
        }
        if (has("color") || has("colour")) && has("header") {
            return Some(Head::HeaderColor);
        }
        let kind = if has("email") {
            PiiKind::Email
        } else if has("phone") {
            PiiKind::Phone
        } else if has("card number") {
            PiiKind::CardNumber
        } else if has("id number") {
            PiiKind::IdNumber
        } else if has("address") {
            PiiKind::Address
        } else if has("name") {
            PiiKind::Name
        } else {
            return None;
        };
        Some(Head::Privacy(kind))
    }
}

#[derive(Debug, Clone)]
struct Template {
    token: TokenId,
    /// Zero-mean, unit-norm pixels at layout scale, row-major.
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyGlyphSurrogate {
    layout: ScreenLayout,
    vocab: Vocab,
    params: ToyParams,
    bank: Vec<Template>,
    colors: Vec<(TokenId, [f64; 3])>,
    counts: Vec<TokenId>,
    eos: TokenId,
    hash: String,
}

fn vocab_tokens() -> Vec<String> {
    let mut t = vec![EOS_TOKEN.to_string()];
    t.extend(GLYPH_CHARS.chars().map(|c| c.to_string()));
    t.extend(COLOR_WORDS.iter().map(|(w, _)| w.to_string()));
    t.extend(COUNT_WORDS.iter().map(|w| w.to_string()));
    t
}

fn bank_bitmaps() -> Vec<[f64; GLYPH_SIZE * GLYPH_SIZE]> {
    let mut out = vec![font::pixels(&font::END_MARKER)];
    out.extend(GLYPH_CHARS.chars().map(|c| font::pixels(&font::glyph(c).unwrap())));
    out
}

fn scaled_template(raw: &[f64], unit: usize) -> Vec<f64> {
    let side = GLYPH_SIZE * unit;
    let mut v: Vec<f64> = (0..side * side)
        .map(|i| raw[(i / side / unit) * GLYPH_SIZE + (i % side) / unit])
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn log_softmax(logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = logits.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let lse = m + z.ln();
    let lp: Vec<f64> = logits.iter().map(|l| l - lse).collect();
    let p = lp.iter().map(|v| v.exp()).collect();
    (lp, p)
}

/// Mean over `r` (pixels with a full 3×3 neighbourhood) of `Σ_c (x − box3(x))²`.
pub(crate) fn highpass_energy(x: &Image, r: &Rect) -> f64 {
    let (h, w) = (x.height(), x.width());
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in r.y.max(1)..r.bottom().min(h - 1) {
        for xx in r.x.max(1)..r.right().min(w - 1) {
            count += 1;
            for c in 0..3 {
                let hp = highpass_at(x, c, y, xx);
                sum += hp * hp;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[inline]
fn highpass_at(x: &Image, c: usize, y: usize, xx: usize) -> f64 {
    let mut s = 0.0;
    for dy in 0..3 {
        for dx in 0..3 {
            s += x.get(c, y + dy - 1, xx + dx - 1) as f64;
        }
    }
    x.get(c, y, xx) as f64 - s / 9.0
}

/// Adds `scale · ∂ highpass_energy / ∂x` into `grad`.
fn highpass_energy_backward(x: &Image, r: &Rect, scale: f64, grad: &mut [f64]) {
    let (h, w) = (x.height(), x.width());
    let ys = r.y.max(1)..r.bottom().min(h - 1);
    let xs = r.x.max(1)..r.right().min(w - 1);
    let count = ys.len() * xs.len();
    if count == 0 {
        return;
    }
    let k = 2.0 * scale / count as f64;
    for c in 0..3 {
        for y in ys.clone() {
            for xx in xs.clone() {
                let g = k * highpass_at(x, c, y, xx);
                grad[x.index(c, y, xx)] += g;
                for dy in 0..3 {
                    for dx in 0..3 {
                        grad[x.index(c, y + dy - 1, xx + dx - 1)] -= g / 9.0;
                    }
                }
            }
        }
    }
}

struct CellStats {
    centered: Vec<f64>,
    norm: f64,
    /// Template correlations, sign-corrected for the ink polarity.
    dots: Vec<f64>,
    polarity: f64,
}

impl ToyGlyphSurrogate {
    /// The toy reader for images of `shape`, using the standard screen layout
    /// when the image is large enough and the single-cell layout otherwise.
    pub fn new(shape: ImageShape) -> Result<Self> {
        let layout = if shape.height >= screen::MIN_STANDARD_SIDE && shape.width >= screen::MIN_STANDARD_SIDE {
            ScreenLayout::standard(shape)?
        } else {
            ScreenLayout::tiny(shape)?
        };
        let mut model = Self::from_parts(layout.clone(), ToyParams::default())?;
        if layout.shape.height >= screen::MIN_STANDARD_SIDE && layout.shape.width >= screen::MIN_STANDARD_SIDE {
            let params = ToyParams {
                button_energy: calibrate_button(&layout),
                field_energy: calibrate_fields(&layout)?,
                ..ToyParams::default()
            };
            model = Self::from_parts(layout, params)?;
        }
        Ok(model)
    }

    pub fn from_parts(layout: ScreenLayout, params: ToyParams) -> Result<Self> {
        Self::from_raw(layout, params, &bank_bitmaps())
    }

    fn from_raw(layout: ScreenLayout, params: ToyParams, raw: &[[f64; 25]]) -> Result<Self> {
        if params.field_energy.len() != PiiKind::ALL.len() {
            return Err(Error::InvalidInput("one field energy per PII kind".into()));
        }
        let vocab = Vocab::new(vocab_tokens())?;
        let eos = vocab.eos().expect("vocabulary has an end token");
        let mut bank = Vec::with_capacity(raw.len());
        let mut token_order = vec![EOS_TOKEN.to_string()];
        token_order.extend(GLYPH_CHARS.chars().map(|c| c.to_string()));
        if raw.len() != token_order.len() {
            return Err(Error::Shape(format!(
                "template bank has {} entries, expected {}",
                raw.len(),
                token_order.len()
            )));
        }
        for (tok, r) in token_order.iter().zip(raw) {
            bank.push(Template {
                token: vocab.id(tok).unwrap(),
                values: scaled_template(r, layout.unit),
            });
        }
        let colors = COLOR_WORDS
            .iter()
            .map(|(w, rgb)| (vocab.id(w).unwrap(), rgb.map(|v| v as f64 / 255.0)))
            .collect();
        let counts = COUNT_WORDS.iter().map(|w| vocab.id(w).unwrap()).collect();
        let mut model = Self {
            layout,
            vocab,
            params,
            bank,
            colors,
            counts,
            eos,
            hash: String::new(),
        };
        model.hash = hex_digest(&Sha256::digest(model.blob(raw)));
        Ok(model)
    }

    pub fn layout(&self) -> &ScreenLayout {
        &self.layout
    }

    pub fn params(&self) -> &ToyParams {
        &self.params
    }

    fn blob(&self, raw: &[[f64; 25]]) -> Vec<u8> {
        let mut out = Vec::new();
        let meta = serde_json::to_vec(&(&self.layout, &self.params, &self.vocab)).expect("plain data");
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for t in raw {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Writes `<path>.bin` and a `<path>.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let blob = self.blob(&bank_bitmaps());
        let bin = path.with_extension("bin");
        std::fs::write(&bin, &blob).map_err(|e| Error::io(&bin, e))?;
        let sidecar = Sidecar {
            format_version: FORMAT_VERSION,
            id: TOY_GLYPH_ID.to_string(),
            image_shape: self.layout.shape,
            vocab: self.vocab.clone(),
            params: self.params.clone(),
            layout: self.layout.clone(),
            template_count: self.bank.len(),
            content_hash: self.hash.clone(),
        };
        let json = path.with_extension("json");
        let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::json("surrogate sidecar", e))?;
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = path.with_extension("json");
        let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::json(json.display().to_string(), e))?;
        if sidecar.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                what: json.display().to_string(),
                expected: FORMAT_VERSION,
                found: sidecar.format_version,
            });
        }
        let bin = path.with_extension("bin");
        let blob = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        if hex_digest(&Sha256::digest(&blob)) != sidecar.content_hash {
            return Err(Error::Checksum(bin));
        }
        let meta_len = u64::from_le_bytes(blob[..8].try_into().unwrap()) as usize;
        let (layout, params, _vocab): (ScreenLayout, ToyParams, Vocab) =
            serde_json::from_slice(&blob[8..8 + meta_len]).map_err(|e| Error::json("surrogate blob", e))?;
        let body = &blob[8 + meta_len..];
        if body.len() != sidecar.template_count * 25 * 8 {
            return Err(Error::Checksum(bin));
        }
        let raw: Vec<[f64; 25]> = body
            .chunks_exact(25 * 8)
            .map(|chunk| {
                let mut t = [0.0; 25];
                for (i, b) in chunk.chunks_exact(8).enumerate() {
                    t[i] = f64::from_le_bytes(b.try_into().unwrap());
                }
                t
            })
            .collect();
        Self::from_raw(layout, params, &raw)
    }

    fn head(&self, question: &str) -> Result<Head> {
        Head::parse(question).ok_or_else(|| Error::UnsupportedQuestion {
            model: TOY_GLYPH_ID.to_string(),
            question: question.to_string(),
        })
    }

    fn eos_only(&self) -> Vec<f64> {
        let mut l = vec![FLOOR_LOGIT; self.vocab.len()];
        l[self.eos] = 0.0;
        l
    }

    fn cell_for(&self, kind: PiiKind, t: usize) -> Option<Rect> {
        let slot = self.layout.slot(kind);
        (t < slot.capacity).then(|| self.layout.cell(slot, t))
    }

    /// `+1` for light ink on a dark card, `−1` for dark ink on a light card,
    /// judged from the card margin left of the slot.
    fn polarity(&self, x: &Image, slot: &GlyphSlot) -> f64 {
        let card = &self.layout.card;
        let x0 = card.x.min(slot.left.saturating_sub(1));
        let strip = Rect::new(slot.top, x0, self.layout.glyph_side(), (slot.left - x0).max(1));
        let mut sum = 0.0;
        for (y, xx) in strip.pixels() {
            let [r, g, b] = x.rgb(y, xx);
            sum += (r + g + b) as f64 / 3.0;
        }
        if sum / strip.area() as f64 > 0.5 {
            -1.0
        } else {
            1.0
        }
    }

    fn cell_stats(&self, x: &Image, kind: PiiKind, cell: &Rect) -> CellStats {
        let mut gray = Vec::with_capacity(cell.area());
        for (y, xx) in cell.pixels() {
            let [r, g, b] = x.rgb(y, xx);
            gray.push((r as f64 + g as f64 + b as f64) / 3.0);
        }
        let mean = gray.iter().sum::<f64>() / gray.len() as f64;
        let centered: Vec<f64> = gray.iter().map(|g| g - mean).collect();
        let eps = self.params.ncc_epsilon * self.layout.unit as f64;
        let norm = (centered.iter().map(|v| v * v).sum::<f64>() + eps * eps).sqrt();
        let polarity = self.polarity(x, self.layout.slot(kind));
        let dots = self
            .bank
            .iter()
            .map(|t| polarity * t.values.iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        CellStats {
            centered,
            norm,
            dots,
            polarity,
        }
    }

    fn button_count(&self, x: &Image) -> f64 {
        self.layout
            .buttons
            .iter()
            .map(|b| highpass_energy(x, &b.inset(1)) / self.params.button_energy)
            .sum()
    }

    fn field_count(&self, x: &Image) -> f64 {
        self.layout
            .slots
            .iter()
            .map(|s| highpass_energy(x, &self.layout.field_region(s)) / self.params.field_energy[s.kind.index()])
            .sum()
    }

    fn header_mean(&self, x: &Image) -> [f64; 3] {
        let r = &self.layout.header;
        let mut m = [0.0; 3];
        for (y, xx) in r.pixels() {
            for (c, v) in m.iter_mut().enumerate() {
                *v += x.get(c, y, xx) as f64;
            }
        }
        m.map(|v| v / r.area() as f64)
    }

    fn count_logits(&self, n: f64) -> Vec<f64> {
        let mut l = vec![FLOOR_LOGIT; self.vocab.len()];
        for (k, tok) in self.counts.iter().enumerate() {
            let d = n - (k + 1) as f64;
            l[*tok] = -d * d / self.params.count_temperature;
        }
        l
    }

    fn step_logits(&self, x: &Image, head: Head, t: usize) -> Vec<f64> {
        match head {
            Head::Privacy(kind) => match self.cell_for(kind, t) {
                None => self.eos_only(),
                Some(cell) => {
                    let st = self.cell_stats(x, kind, &cell);
                    let mut l = vec![FLOOR_LOGIT; self.vocab.len()];
                    for (tpl, dot) in self.bank.iter().zip(&st.dots) {
                        l[tpl.token] = dot / st.norm / self.params.glyph_temperature;
                    }
                    l
                }
            },
            _ if t > 0 => self.eos_only(),
            Head::HeaderColor => {
                let m = self.header_mean(x);
                let mut l = vec![FLOOR_LOGIT; self.vocab.len()];
                for (tok, c) in &self.colors {
                    let d2: f64 = (0..3).map(|i| (m[i] - c[i]).powi(2)).sum();
                    l[*tok] = -d2 / self.params.color_temperature;
                }
                l
            }
            Head::ButtonCount => self.count_logits(self.button_count(x)),
            Head::FieldCount => self.count_logits(self.field_count(x)),
        }
    }

    /// Adds `scale · Σ_j dlogits_j ∂logit_j/∂x` into `grad`.
    fn step_backward(&self, x: &Image, head: Head, t: usize, dlogits: &[f64], scale: f64, grad: &mut [f64]) {
        match head {
            Head::Privacy(kind) => {
                let Some(cell) = self.cell_for(kind, t) else { return };
                let st = self.cell_stats(x, kind, &cell);
                let temp = self.params.glyph_temperature;
                let mut a = vec![0.0; st.centered.len()];
                let mut b = 0.0;
                for (tpl, dot) in self.bank.iter().zip(&st.dots) {
                    let w = dlogits[tpl.token] / temp;
                    if w == 0.0 {
                        continue;
                    }
                    b += w * dot;
                    for (ai, ti) in a.iter_mut().zip(&tpl.values) {
                        *ai += w * st.polarity * ti;
                    }
                }
                let d = st.norm;
                let d3 = d * d * d;
                for (i, (y, xx)) in cell.pixels().enumerate() {
                    let dg = a[i] / d - b * st.centered[i] / d3;
                    let v = scale * dg / 3.0;
                    for c in 0..3 {
                        grad[x.index(c, y, xx)] += v;
                    }
                }
            }
            _ if t > 0 => {}
            Head::HeaderColor => {
                let m = self.header_mean(x);
                let mut dm = [0.0; 3];
                for (tok, col) in &self.colors {
                    for i in 0..3 {
                        dm[i] += dlogits[*tok] * -2.0 * (m[i] - col[i]) / self.params.color_temperature;
                    }
                }
                let r = &self.layout.header;
                let inv = scale / r.area() as f64;
                for (y, xx) in r.pixels() {
                    for (c, d) in dm.iter().enumerate() {
                        grad[x.index(c, y, xx)] += d * inv;
                    }
                }
            }
            Head::ButtonCount | Head::FieldCount => {
                let n = if head == Head::ButtonCount {
                    self.button_count(x)
                } else {
                    self.field_count(x)
                };
                let dn: f64 = self
                    .counts
                    .iter()
                    .enumerate()
                    .map(|(k, tok)| dlogits[*tok] * -2.0 * (n - (k + 1) as f64) / self.params.count_temperature)
                    .sum();
                if dn == 0.0 {
                    return;
                }
                if head == Head::ButtonCount {
                    for b in &self.layout.buttons {
                        highpass_energy_backward(x, &b.inset(1), scale * dn / self.params.button_energy, grad);
                    }
                } else {
                    for s in &self.layout.slots {
                        let r = self.layout.field_region(s);
                        highpass_energy_backward(x, &r, scale * dn / self.params.field_energy[s.kind.index()], grad);
                    }
                }
            }
        }
    }

    /// Estimated number of buttons and filled fields, before rounding.
    pub fn layout_counts(&self, x: &Image) -> (f64, f64) {
        (self.button_count(x), self.field_count(x))
    }
}

impl SurrogateModel for ToyGlyphSurrogate {
    fn id(&self) -> &str {
        TOY_GLYPH_ID
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn image_shape(&self) -> ImageShape {
        self.layout.shape
    }

    fn parameter_hash(&self) -> String {
        self.hash.clone()
    }

    fn step_logprobs(&self, x: &Image, question: &str, prefix: &[TokenId]) -> Result<Vec<f64>> {
        let head = self.head(question)?;
        Ok(log_softmax(&self.step_logits(x, head, prefix.len())).0)
    }

    fn sequence_logprob(
        &self,
        x: &Image,
        question: &str,
        answer: &[TokenId],
        mut grad: Option<(f64, &mut [f64])>,
    ) -> Result<f64> {
        let head = self.head(question)?;
        if let Some((_, g)) = &grad {
            if g.len() != x.data().len() {
                return Err(Error::Shape("gradient buffer does not match the image".into()));
            }
        }
        let mut total = 0.0;
        for (t, &a) in answer.iter().enumerate() {
            if a >= self.vocab.len() {
                return Err(Error::OutOfVocabulary { token: format!("#{a}") });
            }
            let logits = self.step_logits(x, head, t);
            let (lp, p) = log_softmax(&logits);
            total += lp[a];
            if let Some((scale, g)) = grad.as_mut() {
                let mut d: Vec<f64> = p.iter().map(|v| -v).collect();
                d[a] += 1.0;
                self.step_backward(x, head, t, &d, *scale, g);
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    id: String,
    image_shape: ImageShape,
    vocab: Vocab,
    params: ToyParams,
    layout: ScreenLayout,
    template_count: usize,
    content_hash: String,
}

/// Light card colour used for calibration renders.
const CALIBRATION_CARD: [f32; 3] = [224.0 / 255.0; 3];

fn calibrate_button(layout: &ScreenLayout) -> f64 {
    let mut img = Image::filled(layout.shape, [0.9; 3]);
    let b = layout.buttons[0];
    screen::draw_button(&mut img, &b, layout.unit);
    highpass_energy(&img, &b.inset(1))
}

fn calibrate_fields(layout: &ScreenLayout) -> Result<Vec<f64>> {
    let mut out = vec![0.0; PiiKind::ALL.len()];
    let ink = screen::ink_for(CALIBRATION_CARD);
    for (kind, samples) in FIELD_CALIBRATION {
        let slot: GlyphSlot = *layout.slot(kind);
        let mut total = 0.0;
        for s in samples {
            let mut img = Image::filled(layout.shape, CALIBRATION_CARD);
            screen::draw_slot_text(&mut img, layout, &slot, s, ink)?;
            total += highpass_energy(&img, &layout.field_region(&slot));
        }
        out[kind.index()] = total / samples.len() as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn question_routing() {
        assert_eq!(Head::parse("How many buttons are on the screen?"), Some(Head::ButtonCount));
        assert_eq!(
            Head::parse("How many details are listed on the profile card?"),
            Some(Head::FieldCount)
        );
        assert_eq!(
            Head::parse("What is the user's email address?"),
            Some(Head::Privacy(PiiKind::Email))
        );
        assert_eq!(
            Head::parse("What is the home address displayed?"),
            Some(Head::Privacy(PiiKind::Address))
        );
        assert_eq!(
            Head::parse("What is the card number on the screen?"),
            Some(Head::Privacy(PiiKind::CardNumber))
        );
        assert_eq!(Head::parse("Tell me a joke"), None);
    }

    #[test]
    fn vocabulary_is_small() {
        assert!(vocab_tokens().len() <= 128);
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let shape = ImageShape::new(6, 7);
        let data: Vec<f32> = (0..3 * 42).map(|i| ((i * 37 % 101) as f32) / 101.0).collect();
        let x = Image::from_planar(shape, data).unwrap();
        let r = Rect::new(0, 1, 5, 5);
        let mut g = vec![0.0; x.data().len()];
        highpass_energy_backward(&x, &r, 1.0, &mut g);
        for i in 0..x.data().len() {
            let h = 1e-3f32;
            let mut a = x.clone();
            a.data_mut()[i] += h;
            let mut b = x.clone();
            b.data_mut()[i] -= h;
            let fd = (highpass_energy(&a, &r) - highpass_energy(&b, &r)) / (2.0 * h as f64);
            assert!((fd - g[i]).abs() < 1e-3 * fd.abs().max(1.0), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn calibration_is_positive() {
        let m = ToyGlyphSurrogate::new(ImageShape::new(128, 128)).unwrap();
        assert!(m.params().button_energy > 0.0);
        assert!(m.params().field_energy.iter().all(|e| *e > 0.0));
    }
}
