//! Small PNG charts for reports. Labels use the bitmap font.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::font::{glyph, GLYPH_SIZE};

const WIDTH: u32 = 720;
const HEIGHT: u32 = 420;
const MARGIN_LEFT: i32 = 60;
const MARGIN_RIGHT: i32 = 170;
const MARGIN_TOP: i32 = 40;
const MARGIN_BOTTOM: i32 = 60;
const TEXT_SCALE: i32 = 2;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn plot_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn text_width(text: &str) -> i32 {
    text.chars().count() as i32 * (GLYPH_SIZE as i32 + 1) * TEXT_SCALE
}

fn draw_text<DB: DrawingBackend>(area: &DrawingArea<DB, plotters::coord::Shift>, text: &str, x: i32, y: i32) {
    let step = (GLYPH_SIZE as i32 + 1) * TEXT_SCALE;
    for (i, c) in text.chars().enumerate() {
        if c == ' ' {
            continue;
        }
        let Some(g) = glyph(c) else { continue };
        for (r, row) in g.iter().enumerate() {
            for (col, ch) in row.chars().enumerate() {
                if ch != '#' {
                    continue;
                }
                let px = x + i as i32 * step + col as i32 * TEXT_SCALE;
                let py = y + r as i32 * TEXT_SCALE;
                let _ = area.draw(&Rectangle::new(
                    [(px, py), (px + TEXT_SCALE, py + TEXT_SCALE)],
                    BLACK.filled(),
                ));
            }
        }
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Frame {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(ymin: f64, ymax: f64) -> Self {
        Self {
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP,
            x1: WIDTH as i32 - MARGIN_RIGHT,
            y1: HEIGHT as i32 - MARGIN_BOTTOM,
            ymin,
            ymax,
        }
    }

    fn y(&self, v: f64) -> i32 {
        let t = ((v - self.ymin) / (self.ymax - self.ymin)).clamp(0.0, 1.0);
        self.y1 - (t * (self.y1 - self.y0) as f64).round() as i32
    }

    fn draw_axes<DB: DrawingBackend>(&self, area: &DrawingArea<DB, plotters::coord::Shift>, title: &str) {
        let _ = area.draw(&PathElement::new(
            vec![(self.x0, self.y0), (self.x0, self.y1), (self.x1, self.y1)],
            BLACK,
        ));
        for k in 0..=4 {
            let v = self.ymin + (self.ymax - self.ymin) * k as f64 / 4.0;
            let y = self.y(v);
            let _ = area.draw(&PathElement::new(vec![(self.x0 - 4, y), (self.x0, y)], BLACK));
            let _ = area.draw(&PathElement::new(vec![(self.x0 + 1, y), (self.x1, y)], RGBColor(225, 225, 225)));
            let label = fmt_tick(v);
            draw_text(area, &label, self.x0 - 8 - text_width(&label), y - GLYPH_SIZE as i32);
        }
        draw_text(area, title, self.x0, 12);
    }

    fn legend<DB: DrawingBackend>(&self, area: &DrawingArea<DB, plotters::coord::Shift>, names: &[String]) {
        for (i, name) in names.iter().enumerate() {
            let y = self.y0 + 6 + i as i32 * 22;
            let x = self.x1 + 14;
            let _ = area.draw(&Rectangle::new([(x, y), (x + 12, y + 12)], PALETTE[i % PALETTE.len()].filled()));
            draw_text(area, name, x + 18, y + 1);
        }
    }
}

/// One line per series over shared numeric x positions.
pub fn line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    xs: &[f64],
    series: &[(String, Vec<f64>)],
    y_range: (f64, f64),
) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("a line plot needs at least two x positions".into()));
    }
    if !(y_range.1 > y_range.0) {
        return Err(Error::InvalidInput("empty y range".into()));
    }
    let root = BitMapBackend::new(path, (WIDTH, HEIGHT)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let frame = Frame::new(y_range.0, y_range.1);
    frame.draw_axes(&root, title);
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = (xmax - xmin).max(f64::EPSILON);
    let px = |v: f64| frame.x0 + 20 + (((v - xmin) / span) * (frame.x1 - frame.x0 - 40) as f64).round() as i32;
    for x in xs {
        let label = fmt_tick(*x);
        draw_text(&root, &label, px(*x) - text_width(&label) / 2, frame.y1 + 8);
    }
    draw_text(&root, x_label, (frame.x0 + frame.x1) / 2 - text_width(x_label) / 2, frame.y1 + 32);
    for (i, (_, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(i32, i32)> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| (px(*x), frame.y(*y)))
            .collect();
        root.draw(&PathElement::new(pts.clone(), color.stroke_width(2)))
            .map_err(|e| plot_err(path, e))?;
        for p in pts {
            root.draw(&Circle::new(p, 4, color.filled())).map_err(|e| plot_err(path, e))?;
        }
    }
    frame.legend(&root, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    root.present().map_err(|e| plot_err(path, e))
}

/// Grouped bars: one group per category, one bar per series; y spans `[0, 1]`.
pub fn bar_plot(path: &Path, title: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> Result<()> {
    if categories.is_empty() || series.is_empty() {
        return Err(Error::InvalidInput("a bar plot needs categories and series".into()));
    }
    let root = BitMapBackend::new(path, (WIDTH, HEIGHT)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let frame = Frame::new(0.0, 1.0);
    frame.draw_axes(&root, title);
    let group_w = (frame.x1 - frame.x0) / categories.len() as i32;
    let bar_w = ((group_w - 10) / series.len() as i32).max(1);
    for (g, cat) in categories.iter().enumerate() {
        let gx = frame.x0 + g as i32 * group_w + 5;
        for (i, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(g).copied().unwrap_or(f64::NAN);
            if !v.is_finite() {
                continue;
            }
            let x = gx + i as i32 * bar_w;
            root.draw(&Rectangle::new(
                [(x, frame.y(v)), (x + bar_w - 1, frame.y1)],
                PALETTE[i % PALETTE.len()].filled(),
            ))
            .map_err(|e| plot_err(path, e))?;
        }
        draw_text(&root, cat, gx + group_w / 2 - 5 - text_width(cat) / 2, frame.y1 + 8);
    }
    frame.legend(&root, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    root.present().map_err(|e| plot_err(path, e))
}
