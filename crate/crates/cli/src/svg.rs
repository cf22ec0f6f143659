//! Minimal SVG line and scatter plots. Output depends only on the data, so
//! plots are byte-stable across runs.

use std::fmt::Write as _;

const PANEL_W: f64 = 720.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Points,
    Bars,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, style: Style, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            style,
        }
    }

    pub fn from_xy(label: impl Into<String>, style: Style, x: &[f64], y: &[f64]) -> Self {
        Series::new(
            label,
            style,
            x.iter().copied().zip(y.iter().copied()).collect(),
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed vertical lines at these x positions.
    pub markers_x: Vec<f64>,
}

impl Panel {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Panel::default()
        }
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()) || hi == lo {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let x_range = range(
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(panel.markers_x.iter().copied()),
    );
    let y_range = {
        let (lo, hi) = range(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        if panel.series.iter().any(|s| s.style == Style::Bars) {
            (lo.min(0.0), hi)
        } else {
            (lo, hi)
        }
    };
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let x0 = MARGIN_L;
    let y0 = top + MARGIN_T;
    let sx = |x: f64| x0 + (x - x_range.0) / (x_range.1 - x_range.0) * plot_w;
    let sy = |y: f64| y0 + plot_h - (y - y_range.0) / (y_range.1 - y_range.0) * plot_h;

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        x0 + plot_w / 2.0,
        top + 20.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );
    for t in ticks(x_range.0, x_range.1) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
            y0 + plot_h,
            y0 + plot_h + 4.0,
            y0 + plot_h + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(y_range.0, y_range.1) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 3.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        x0 + plot_w / 2.0,
        y0 + plot_h + 36.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        y0 + plot_h / 2.0,
        y0 + plot_h / 2.0,
        escape(&panel.y_label)
    );
    let _ = writeln!(out, r#"<g clip-path="url(#clip{})">"#, top as usize);
    let _ = writeln!(
        out,
        r#"<clipPath id="clip{}"><rect x="{x0:.2}" y="{y0:.2}" width="{plot_w:.2}" height="{plot_h:.2}"/></clipPath>"#,
        top as usize
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let finite = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        match s.style {
            Style::Line => {
                let pts: Vec<String> = finite
                    .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            Style::Points => {
                for p in finite {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{color}"/>"#,
                        sx(p.0),
                        sy(p.1)
                    );
                }
            }
            Style::Bars => {
                let pts: Vec<(f64, f64)> = finite.copied().collect();
                let w = if pts.len() > 1 {
                    (sx(pts[1].0) - sx(pts[0].0)).abs()
                } else {
                    4.0
                };
                for p in pts {
                    let (ya, yb) = (sy(p.1), sy(0.0f64.max(y_range.0)));
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.45"/>"#,
                        sx(p.0) - w / 2.0,
                        ya.min(yb),
                        w,
                        (yb - ya).abs()
                    );
                }
            }
        }
    }
    for m in &panel.markers_x {
        let x = sx(*m);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="4 3"/>"##,
            y0 + plot_h
        );
    }
    out.push_str("</g>\n");
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let y = y0 + 14.0 + 14.0 * k as f64;
        let x = x0 + plot_w - 150.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
            y - 5.0,
            x + 18.0,
            escape(&s.label)
        );
    }
}

/// Stacks `panels` vertically into one SVG document.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let header = 28.0;
    let height = header + PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="16" text-anchor="middle">{}</text>"#,
        PANEL_W / 2.0,
        escape(title)
    );
    for (k, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, header + PANEL_H * k as f64);
    }
    out.push_str("</svg>\n");
    out
}
