//! Minimal SVG 1.1 writer and the chart types used by the exploration step.
//!
//! Every document is 960×540 and has exactly one `<g class="legend">`.
//! Rectangles are reserved for data (bars, heatmap cells), so a chart with a
//! single bar contains a single `<rect>`.

use super::proportion::ProportionRow;
use super::stats::CorrelationMatrix;
use super::ExploreError;
use std::fmt::Write as _;

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 540.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Coordinates are written with two decimals, which keeps output stable.
fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub struct SvgDocument {
    body: String,
    depth: usize,
}

impl Default for SvgDocument {
    fn default() -> Self {
        Self::new()
    }
}

impl SvgDocument {
    pub fn new() -> Self {
        SvgDocument { body: String::new(), depth: 1 }
    }

    pub fn raw(&mut self, element: &str) {
        for _ in 0..self.depth {
            self.body.push_str("  ");
        }
        self.body.push_str(element);
        self.body.push('\n');
    }

    pub fn open_group(&mut self, class: &str) {
        self.raw(&format!("<g class=\"{}\">", escape(class)));
        self.depth += 1;
    }

    pub fn open_group_with(&mut self, class: &str, attrs: &[(&str, &str)]) {
        let mut tag = format!("<g class=\"{}\"", escape(class));
        for (k, v) in attrs {
            let _ = write!(tag, " {k}=\"{}\"", escape(v));
        }
        tag.push('>');
        self.raw(&tag);
        self.depth += 1;
    }

    pub fn close_group(&mut self) {
        self.depth -= 1;
        self.raw("</g>");
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, title: Option<&str>) {
        let open = format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"",
            n(x),
            n(y),
            n(w.max(0.0)),
            n(h.max(0.0)),
            escape(fill)
        );
        match title {
            Some(t) => self.raw(&format!("{open}><title>{}</title></rect>", escape(t))),
            None => self.raw(&format!("{open}/>")),
        }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.raw(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>",
            n(x1),
            n(y1),
            n(x2),
            n(y2),
            escape(stroke),
            n(width)
        ));
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        self.raw(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>",
            n(cx),
            n(cy),
            n(r),
            escape(fill)
        ));
    }

    /// Open polyline through `points`.
    pub fn polyline_path(&mut self, points: &[(f64, f64)], stroke: &str, class: &str) {
        let mut d = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, n(*x), n(*y));
        }
        self.raw(&format!(
            "<path class=\"{}\" d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            escape(class),
            escape(stroke)
        ));
    }

    /// Filled path from raw path data.
    pub fn filled_path(&mut self, d: &str, fill: &str) {
        self.raw(&format!(
            "<path d=\"{}\" fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"0.5\" fill-rule=\"evenodd\"/>",
            escape(d),
            escape(fill)
        ));
    }

    pub fn text(&mut self, x: f64, y: f64, content: &str, anchor: &str, size: f64) {
        self.raw(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"{}\" font-family=\"sans-serif\">{}</text>",
            n(x),
            n(y),
            n(size),
            escape(content)
        ));
    }

    pub fn rotated_text(&mut self, x: f64, y: f64, content: &str, size: f64) {
        self.raw(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\" font-family=\"sans-serif\" transform=\"rotate(-90 {} {})\">{}</text>",
            n(x),
            n(y),
            n(size),
            n(x),
            n(y),
            escape(content)
        ));
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             {}</svg>\n",
            self.body,
            w = WIDTH,
            h = HEIGHT
        )
    }
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct LinearScale {
    pub domain: (f64, f64),
    pub range: (f64, f64),
}

impl LinearScale {
    pub fn new(domain: (f64, f64), range: (f64, f64)) -> Self {
        let domain = if domain.1 > domain.0 { domain } else { (domain.0 - 0.5, domain.0 + 0.5) };
        LinearScale { domain, range }
    }

    pub fn map(&self, v: f64) -> f64 {
        let t = (v - self.domain.0) / (self.domain.1 - self.domain.0);
        self.range.0 + t * (self.range.1 - self.range.0)
    }
}

/// Roughly `count` round tick values covering `[low, high]`.
pub fn nice_ticks(low: f64, high: f64, count: usize) -> Vec<f64> {
    if !(high > low) || count == 0 {
        return vec![low];
    }
    let raw = (high - low) / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (low / step).ceil() as i64;
    let end = (high / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

pub fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Linear interpolation between two `#rrggbb` colours.
pub fn mix_color(from: &str, to: &str, t: f64) -> String {
    let parse = |s: &str| -> [f64; 3] {
        let s = s.trim_start_matches('#');
        let c = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).unwrap_or(0) as f64;
        [c(0), c(2), c(4)]
    };
    let (a, b) = (parse(from), parse(to));
    let t = t.clamp(0.0, 1.0);
    let ch = |i: usize| (a[i] + t * (b[i] - a[i])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

fn draw_axes(doc: &mut SvgDocument, frame: &Frame, x_label: &str, y_label: &str) {
    doc.open_group("axes");
    doc.line(frame.left, frame.bottom, frame.right, frame.bottom, "#000000", 1.0);
    doc.line(frame.left, frame.top, frame.left, frame.bottom, "#000000", 1.0);
    doc.text((frame.left + frame.right) / 2.0, frame.bottom + 40.0, x_label, "middle", 13.0);
    doc.rotated_text(frame.left - 48.0, (frame.top + frame.bottom) / 2.0, y_label, 13.0);
    doc.close_group();
}

fn draw_y_ticks(doc: &mut SvgDocument, frame: &Frame, scale: &LinearScale) {
    doc.open_group("y-ticks");
    for tick in nice_ticks(scale.domain.0, scale.domain.1, 5) {
        let y = scale.map(tick);
        doc.line(frame.left - 4.0, y, frame.left, y, "#000000", 1.0);
        doc.text(frame.left - 7.0, y + 4.0, &format_tick(tick), "end", 10.0);
    }
    doc.close_group();
}

/// Policy counts as bars (left panel) beside claim proportions with
/// confidence-interval whiskers (right panel).
pub fn render_bar_with_ci(rows: &[ProportionRow], feature: &str) -> Result<String, ExploreError> {
    if rows.is_empty() {
        return Err(ExploreError::EmptySeries("no levels"));
    }
    let mut doc = SvgDocument::new();
    doc.text(WIDTH / 2.0, 24.0, &format!("Policies and claim proportion by {feature}"), "middle", 16.0);

    let left = Frame { left: 70.0, right: 450.0, top: 50.0, bottom: 450.0 };
    let right = Frame { left: 560.0, right: 940.0, top: 50.0, bottom: 450.0 };
    let slot = (left.right - left.left) / rows.len() as f64;
    let label_every = (rows.len() / 12).max(1);

    let max_count = rows.iter().map(|r| r.policy_count).max().unwrap_or(1).max(1) as f64;
    let count_scale = LinearScale::new((0.0, max_count), (left.bottom, left.top));
    doc.open_group("bars");
    for (i, row) in rows.iter().enumerate() {
        let x = left.left + i as f64 * slot + slot * 0.1;
        let y = count_scale.map(row.policy_count as f64);
        let title = format!("{}: {} policies, {} claims", row.level, row.policy_count, row.claim_count);
        doc.rect(x, y, slot * 0.8, left.bottom - y, PALETTE[0], Some(&title));
        // Claim count as a tick inside the bar.
        let yc = count_scale.map(row.claim_count as f64);
        doc.line(x, yc, x + slot * 0.8, yc, PALETTE[1], 2.0);
    }
    doc.close_group();
    draw_y_ticks(&mut doc, &left, &count_scale);
    draw_level_labels(&mut doc, &left, rows, slot, label_every);
    draw_axes(&mut doc, &left, feature, "count");

    let top = rows.iter().map(|r| r.ci_high).fold(0.0, f64::max).max(1e-9);
    let prop_scale = LinearScale::new((0.0, top * 1.05), (right.bottom, right.top));
    let slot_r = (right.right - right.left) / rows.len() as f64;
    doc.open_group("proportions");
    for (i, row) in rows.iter().enumerate() {
        let cx = right.left + (i as f64 + 0.5) * slot_r;
        doc.line(cx, prop_scale.map(row.ci_low), cx, prop_scale.map(row.ci_high), "#555555", 1.5);
        let cap = (slot_r * 0.3).min(8.0);
        doc.line(cx - cap, prop_scale.map(row.ci_low), cx + cap, prop_scale.map(row.ci_low), "#555555", 1.5);
        doc.line(cx - cap, prop_scale.map(row.ci_high), cx + cap, prop_scale.map(row.ci_high), "#555555", 1.5);
        doc.circle(cx, prop_scale.map(row.proportion), 3.5, PALETTE[1]);
    }
    doc.close_group();
    draw_y_ticks(&mut doc, &right, &prop_scale);
    draw_level_labels(&mut doc, &right, rows, slot_r, label_every);
    draw_axes(&mut doc, &right, feature, "claim proportion (95% CI)");

    doc.open_group("legend");
    doc.circle(80.0, 510.0, 6.0, PALETTE[0]);
    doc.text(92.0, 514.0, "policies", "start", 12.0);
    doc.line(180.0, 510.0, 196.0, 510.0, PALETTE[1], 2.0);
    doc.text(202.0, 514.0, "claims", "start", 12.0);
    doc.circle(290.0, 510.0, 4.0, PALETTE[1]);
    doc.text(300.0, 514.0, "proportion with confidence interval", "start", 12.0);
    doc.close_group();
    Ok(doc.finish())
}

fn draw_level_labels(doc: &mut SvgDocument, frame: &Frame, rows: &[ProportionRow], slot: f64, every: usize) {
    doc.open_group("x-labels");
    for (i, row) in rows.iter().enumerate().filter(|(i, _)| i % every == 0) {
        doc.text(frame.left + (i as f64 + 0.5) * slot, frame.bottom + 16.0, &row.level, "middle", 9.0);
    }
    doc.close_group();
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LineOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

/// One `<path>` per series. With `log_x`, x values must be positive.
pub fn render_line(series: &[Series], options: &LineOptions) -> Result<String, ExploreError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(ExploreError::EmptySeries("no points"));
    }
    let tx = |x: f64| if options.log_x { x.log10() } else { x };
    let points = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() || (options.log_x && x <= 0.0) {
            return Err(ExploreError::EmptySeries("non-finite or non-positive coordinate"));
        }
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9);
    let frame = Frame { left: 80.0, right: 780.0, top: 50.0, bottom: 470.0 };
    let xs = LinearScale::new((x0, x1), (frame.left, frame.right));
    let ys = LinearScale::new((y0 - pad, y1 + pad), (frame.bottom, frame.top));

    let mut doc = SvgDocument::new();
    doc.text(WIDTH / 2.0, 28.0, &options.title, "middle", 16.0);
    doc.open_group("series");
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (xs.map(tx(x)), ys.map(y))).collect();
        doc.polyline_path(&pts, PALETTE[i % PALETTE.len()], &s.name);
    }
    doc.close_group();

    doc.open_group("x-ticks");
    for tick in nice_ticks(xs.domain.0, xs.domain.1, 8) {
        let x = xs.map(tick);
        doc.line(x, frame.bottom, x, frame.bottom + 4.0, "#000000", 1.0);
        let label = if options.log_x { format!("1e{}", format_tick(tick)) } else { format_tick(tick) };
        doc.text(x, frame.bottom + 16.0, &label, "middle", 10.0);
    }
    doc.close_group();
    draw_y_ticks(&mut doc, &frame, &ys);
    draw_axes(&mut doc, &frame, &options.x_label, &options.y_label);

    doc.open_group("legend");
    for (i, s) in series.iter().enumerate() {
        let y = 60.0 + 20.0 * i as f64;
        doc.line(800.0, y, 824.0, y, PALETTE[i % PALETTE.len()], 3.0);
        doc.text(830.0, y + 4.0, &s.name, "start", 12.0);
    }
    doc.close_group();
    Ok(doc.finish())
}

/// Diverging colour for a coefficient in `[-1, 1]`; grey when undefined.
pub fn correlation_color(r: Option<f64>) -> String {
    match r {
        None => "#dddddd".to_string(),
        Some(r) if r < 0.0 => mix_color("#ffffff", "#2166ac", -r),
        Some(r) => mix_color("#ffffff", "#b2182b", r),
    }
}

pub fn render_heatmap(matrix: &CorrelationMatrix, title: &str) -> Result<String, ExploreError> {
    let p = matrix.names.len();
    if p == 0 {
        return Err(ExploreError::EmptySeries("no columns"));
    }
    let mut doc = SvgDocument::new();
    doc.text(WIDTH / 2.0, 24.0, title, "middle", 16.0);
    let (left, top) = (200.0, 50.0);
    let cell = ((HEIGHT - top - 110.0) / p as f64).min(40.0);
    doc.open_group("cells");
    for i in 0..p {
        for j in 0..p {
            let r = matrix.get(i, j);
            let label = format!(
                "{} / {}: {}",
                matrix.names[i],
                matrix.names[j],
                r.map_or("undefined".to_string(), |v| format!("{v:.3}"))
            );
            doc.rect(left + j as f64 * cell, top + i as f64 * cell, cell, cell, &correlation_color(r), Some(&label));
        }
    }
    doc.close_group();
    doc.open_group("labels");
    for (i, name) in matrix.names.iter().enumerate() {
        doc.text(left - 6.0, top + (i as f64 + 0.65) * cell, name, "end", 10.0);
        let x = left + (i as f64 + 0.5) * cell;
        let y = top + p as f64 * cell + 8.0;
        doc.raw(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\" transform=\"rotate(-60 {} {})\">{}</text>",
            n(x),
            n(y),
            n(x),
            n(y),
            escape(name)
        ));
    }
    doc.close_group();

    // Colour bar drawn with thick line segments.
    doc.open_group("legend");
    let (bx, by0, by1) = (left + p as f64 * cell + 60.0, top, top + p as f64 * cell);
    let steps = 40;
    for s in 0..steps {
        let r = 1.0 - 2.0 * (s as f64 + 0.5) / steps as f64;
        let ya = by0 + (by1 - by0) * s as f64 / steps as f64;
        let yb = by0 + (by1 - by0) * (s + 1) as f64 / steps as f64;
        doc.line(bx, ya, bx, yb, &correlation_color(Some(r)), 16.0);
    }
    for (v, y) in [(1.0, by0), (0.0, (by0 + by1) / 2.0), (-1.0, by1)] {
        doc.text(bx + 14.0, y + 4.0, &format_tick(v), "start", 10.0);
    }
    doc.close_group();
    Ok(doc.finish())
}
