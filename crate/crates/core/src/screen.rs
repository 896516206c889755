//! Screen geometry shared by the dataset renderer and the toy surrogate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::font::{self, Bitmap, GLYPH_SIZE};
use crate::tensor::{Image, ImageShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiiKind {
    Name,
    Phone,
    Email,
    CardNumber,
    Address,
    IdNumber,
}

impl PiiKind {
    pub const ALL: [PiiKind; 6] = [
        PiiKind::Name,
        PiiKind::Phone,
        PiiKind::Email,
        PiiKind::CardNumber,
        PiiKind::Address,
        PiiKind::IdNumber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PiiKind::Name => "name",
            PiiKind::Phone => "phone",
            PiiKind::Email => "email",
            PiiKind::CardNumber => "card_number",
            PiiKind::Address => "address",
            PiiKind::IdNumber => "id_number",
        }
    }

    pub fn index(self) -> usize {
        PiiKind::ALL.iter().position(|k| *k == self).unwrap()
    }
}

impl fmt::Display for PiiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PiiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PiiKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown PII kind {s:?}")))
    }
}

/// Axis-aligned pixel box, `[y, y + height) × [x, x + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub const fn new(y: usize, x: usize, height: usize, width: usize) -> Self {
        Self { y, x, height, width }
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }

    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.y && y < self.bottom() && x >= self.x && x < self.right()
    }

    pub fn fits(&self, shape: ImageShape) -> bool {
        self.bottom() <= shape.height && self.right() <= shape.width
    }

    /// Shrinks every side by `m` pixels.
    pub fn inset(&self, m: usize) -> Rect {
        Rect::new(
            self.y + m,
            self.x + m,
            self.height.saturating_sub(2 * m),
            self.width.saturating_sub(2 * m),
        )
    }

    /// Grows every side by `m` pixels, clipped to `shape`.
    pub fn expand(&self, m: usize, shape: ImageShape) -> Rect {
        let y = self.y.saturating_sub(m);
        let x = self.x.saturating_sub(m);
        let b = (self.bottom() + m).min(shape.height);
        let r = (self.right() + m).min(shape.width);
        Rect::new(y, x, b - y, r - x)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.bottom()).flat_map(move |y| (self.x..self.right()).map(move |x| (y, x)))
    }
}

/// A row of glyph cells reserved for one PII kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlyphSlot {
    pub kind: PiiKind,
    pub top: usize,
    pub left: usize,
    pub capacity: usize,
}

/// Fixed positions of everything a screenshot can contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenLayout {
    pub shape: ImageShape,
    /// Pixels per font pixel.
    pub unit: usize,
    /// Horizontal distance between glyph cell origins.
    pub pitch: usize,
    pub status_bar: Rect,
    pub header: Rect,
    pub card: Rect,
    pub slots: Vec<GlyphSlot>,
    pub buttons: Vec<Rect>,
    /// Leading cells of each slot read by the field-count head.
    pub field_window: usize,
}

pub const MIN_STANDARD_SIDE: usize = 128;

impl ScreenLayout {
    /// The phone-screen layout used by the dataset, scaled by `min(H, W) / 128`.
    pub fn standard(shape: ImageShape) -> Result<Self> {
        if shape.height < MIN_STANDARD_SIDE || shape.width < MIN_STANDARD_SIDE {
            return Err(Error::Shape(format!(
                "screen layout needs at least {MIN_STANDARD_SIDE}x{MIN_STANDARD_SIDE}, got {}x{}",
                shape.height, shape.width
            )));
        }
        let u = shape.height.min(shape.width) / MIN_STANDARD_SIDE;
        let r = |y: usize, x: usize, h: usize, w: usize| Rect::new(y * u, x * u, h * u, w * u);
        let slots = PiiKind::ALL
            .iter()
            .enumerate()
            .map(|(k, kind)| GlyphSlot {
                kind: *kind,
                top: (24 + 13 * k) * u,
                left: 4 * u,
                capacity: 20,
            })
            .collect();
        let buttons = (0..5).map(|i| r(106, 4 + 24 * i, 16, 20)).collect();
        Ok(Self {
            shape,
            unit: u,
            pitch: 6 * u,
            status_bar: Rect::new(0, 0, 4 * u, shape.width),
            header: Rect::new(4 * u, 0, 14 * u, shape.width),
            card: r(20, 2, 82, 124),
            slots,
            buttons,
            field_window: 8,
        })
    }

    /// A minimal layout for very small images: one shared single-cell slot.
    pub fn tiny(shape: ImageShape) -> Result<Self> {
        if shape.height < 7 || shape.width < 8 {
            return Err(Error::Shape(format!(
                "tiny layout needs at least 7x8, got {}x{}",
                shape.height, shape.width
            )));
        }
        let full = Rect::new(0, 0, shape.height, shape.width);
        let half = shape.width / 2;
        Ok(Self {
            shape,
            unit: 1,
            pitch: 6,
            status_bar: Rect::new(0, 0, 1, shape.width),
            header: full,
            card: full,
            slots: PiiKind::ALL
                .iter()
                .map(|kind| GlyphSlot {
                    kind: *kind,
                    top: 1,
                    left: 1,
                    capacity: 1,
                })
                .collect(),
            buttons: vec![
                Rect::new(0, 0, shape.height, half),
                Rect::new(0, half, shape.height, shape.width - half),
            ],
            field_window: 1,
        })
    }

    pub fn slot(&self, kind: PiiKind) -> &GlyphSlot {
        self.slots
            .iter()
            .find(|s| s.kind == kind)
            .expect("every layout has a slot per kind")
    }

    pub fn glyph_side(&self) -> usize {
        GLYPH_SIZE * self.unit
    }

    pub fn cell(&self, slot: &GlyphSlot, i: usize) -> Rect {
        Rect::new(
            slot.top,
            slot.left + i * self.pitch,
            self.glyph_side(),
            self.glyph_side(),
        )
    }

    /// Box covering the first `cells` cells of a slot.
    pub fn slot_region(&self, slot: &GlyphSlot, cells: usize) -> Rect {
        let cells = cells.max(1);
        Rect::new(
            slot.top,
            slot.left,
            self.glyph_side(),
            (cells - 1) * self.pitch + self.glyph_side(),
        )
    }

    pub fn field_region(&self, slot: &GlyphSlot) -> Rect {
        self.slot_region(slot, self.field_window.min(slot.capacity))
    }
}

/// Fill of every button; fixed so the button head's calibration holds on every theme.
pub const BUTTON_FILL: [f32; 3] = [0.6, 0.6, 0.6];
pub const BUTTON_ICON_DARK: [f32; 3] = [0.2, 0.2, 0.2];
pub const BUTTON_ICON_LIGHT: [f32; 3] = [0.95, 0.95, 0.95];

/// Ink is offset from the card colour by this amount on every channel.
pub const GLYPH_CONTRAST: f32 = 0.4;

/// Rounds to the nearest 8-bit level so rendered images survive PNG encoding.
pub fn quantize(v: f32) -> f32 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

pub fn quantize_rgb(rgb: [f32; 3]) -> [f32; 3] {
    rgb.map(quantize)
}

pub fn fill_rect(img: &mut Image, r: &Rect, rgb: [f32; 3]) {
    let rgb = quantize_rgb(rgb);
    let shape = img.shape();
    for y in r.y..r.bottom().min(shape.height) {
        for x in r.x..r.right().min(shape.width) {
            img.set_rgb(y, x, rgb);
        }
    }
}

/// Paints the set pixels of `bitmap` with its top-left corner at `(y, x)`.
pub fn draw_bitmap(img: &mut Image, y: usize, x: usize, bitmap: &Bitmap, unit: usize, ink: [f32; 3]) {
    let ink = quantize_rgb(ink);
    let shape = img.shape();
    for (r, row) in bitmap.iter().enumerate() {
        for (c, ch) in row.bytes().enumerate() {
            if ch != b'#' {
                continue;
            }
            for dy in 0..unit {
                for dx in 0..unit {
                    let (py, px) = (y + r * unit + dy, x + c * unit + dx);
                    if py < shape.height && px < shape.width {
                        img.set_rgb(py, px, ink);
                    }
                }
            }
        }
    }
}

/// Draws `text` followed by the end marker into `slot`.
pub fn draw_slot_text(
    img: &mut Image,
    layout: &ScreenLayout,
    slot: &GlyphSlot,
    text: &str,
    ink: [f32; 3],
) -> Result<Rect> {
    let n = text.chars().count();
    if n + 1 > slot.capacity {
        return Err(Error::InvalidInput(format!(
            "{:?} needs {} cells, slot {} holds {}",
            text,
            n + 1,
            slot.kind,
            slot.capacity
        )));
    }
    for (i, ch) in text.chars().enumerate() {
        let bm = font::glyph(ch).ok_or_else(|| Error::OutOfVocabulary {
            token: ch.to_string(),
        })?;
        let c = layout.cell(slot, i);
        draw_bitmap(img, c.y, c.x, &bm, layout.unit, ink);
    }
    let c = layout.cell(slot, n);
    draw_bitmap(img, c.y, c.x, &font::END_MARKER, layout.unit, ink);
    Ok(layout.slot_region(slot, n + 1))
}

/// Free-form text with the font at the given pitch; characters without a glyph are skipped.
pub fn draw_text(img: &mut Image, y: usize, x: usize, text: &str, unit: usize, ink: [f32; 3]) {
    let pitch = (GLYPH_SIZE + 1) * unit;
    for (i, ch) in text.chars().enumerate() {
        if let Some(bm) = font::glyph(ch) {
            draw_bitmap(img, y, x + i * pitch, &bm, unit, ink);
        }
    }
}

/// A button: flat fill with a checkered icon in the middle.
pub fn draw_button(img: &mut Image, r: &Rect, unit: usize) {
    fill_rect(img, r, BUTTON_FILL);
    let icon = Rect::new(r.y + 4 * unit, r.x + 6 * unit, 8 * unit, 8 * unit);
    for (y, x) in icon.pixels() {
        let cell = ((y - icon.y) / (2 * unit) + (x - icon.x) / (2 * unit)) % 2;
        let rgb = if cell == 0 { BUTTON_ICON_DARK } else { BUTTON_ICON_LIGHT };
        img.set_rgb(y, x, quantize_rgb(rgb));
    }
}

/// Ink colour for glyphs on a card of colour `card`.
pub fn ink_for(card: [f32; 3]) -> [f32; 3] {
    let lum = (card[0] + card[1] + card[2]) / 3.0;
    let sign = if lum > 0.5 { -1.0 } else { 1.0 };
    card.map(|c| c + sign * GLYPH_CONTRAST)
}
