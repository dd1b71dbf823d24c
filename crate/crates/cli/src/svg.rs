//! Minimal SVG writer. Coordinates are printed with two decimals so output is
//! byte-stable across platforms.

use std::fmt::Write;

pub const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        );
    }

    pub fn dashed(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-dasharray="4 3"/>"#
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}"/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
            pts.join(" ")
        );
    }

    pub fn polygon(&mut self, points: &[(f64, f64)], fill: &str, opacity: f64) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="{opacity:.2}" stroke="none"/>"#,
            pts.join(" ")
        );
    }

    /// Marker shape `k % 3`: circle, square, triangle.
    pub fn marker(&mut self, k: usize, x: f64, y: f64, r: f64, fill: &str, stroke: &str) {
        match k % 3 {
            0 => {
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" stroke="{stroke}"/>"#
                );
            }
            1 => self.rect(x - r, y - r, 2.0 * r, 2.0 * r, fill, stroke),
            _ => {
                let _ = writeln!(
                    self.body,
                    r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
                    x,
                    y - r,
                    x - r,
                    y + r,
                    x + r,
                    y + r
                );
            }
        }
    }

    /// `anchor` is `start`, `middle` or `end`; `rotate` turns the text about its anchor.
    pub fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str, rotate: Option<f64>) {
        let transform = rotate.map_or_else(String::new, |a| format!(r#" transform="rotate({a:.0} {x:.2} {y:.2})""#));
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size:.0}" text-anchor="{anchor}"{transform}>{}</text>"#,
            escape(s)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Roughly five round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 || span.is_infinite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

pub fn tick_label(v: f64) -> String {
    let s = format!("{:.3}", if v.abs() < 1e-12 { 0.0 } else { v });
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// A rectangular plotting area mapping data ranges to pixels.
pub struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

/// Range of `values` padded by 5% (or by 1 when all values coincide).
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    /// Box, numeric ticks on both axes and axis titles.
    pub fn axes(&self, svg: &mut Svg, x_title: &str, y_title: &str, x_numeric: bool) {
        svg.rect(self.left, self.top, self.width, self.height, "none", "#333333");
        if x_numeric {
            for t in ticks(self.x.0, self.x.1) {
                let x = self.px(t);
                svg.line(x, self.top + self.height, x, self.top + self.height + 4.0, "#333333", 1.0);
                svg.text(x, self.top + self.height + 16.0, &tick_label(t), 10.0, "middle", None);
            }
        }
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            svg.line(self.left - 4.0, y, self.left, y, "#333333", 1.0);
            svg.text(self.left - 6.0, y + 3.0, &tick_label(t), 10.0, "end", None);
        }
        svg.text(self.left + self.width / 2.0, self.top + self.height + 34.0, x_title, 12.0, "middle", None);
        let (yx, yy) = (self.left - 44.0, self.top + self.height / 2.0);
        svg.text(yx, yy, y_title, 12.0, "middle", Some(-90.0));
    }

    /// Dashed zero lines when zero lies inside the ranges.
    pub fn zero_lines(&self, svg: &mut Svg) {
        if self.x.0 < 0.0 && self.x.1 > 0.0 {
            let x = self.px(0.0);
            svg.dashed(x, self.top, x, self.top + self.height, "#999999");
        }
        if self.y.0 < 0.0 && self.y.1 > 0.0 {
            let y = self.py(0.0);
            svg.dashed(self.left, y, self.left + self.width, y, "#999999");
        }
    }
}
