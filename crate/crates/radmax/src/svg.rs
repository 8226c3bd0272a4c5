//! Static SVG line charts. Output is plain text with a fixed layout, no
//! timestamps and no external references, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;

pub const PALETTE: [&str; 6] = [
    "#1f5fa8", "#c43d2f", "#2e8b57", "#8a4fbf", "#c78a00", "#3a3a3a",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, index: usize) -> Series {
        Series {
            label: label.into(),
            points,
            color: PALETTE[index % PALETTE.len()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const W: f64 = 860.0;
const H: f64 = 480.0;
const ML: f64 = 64.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 48.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions: multiples of a round step covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: &str, y_label: &str) -> Chart {
        Chart {
            title: title.into(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, series: Series) {
        self.series.push(series);
    }

    pub fn render(&self, config_hash: &str) -> String {
        let finite = |v: f64| v.is_finite();
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if finite(x) && finite(y) {
                    xs = (xs.0.min(x), xs.1.max(x));
                    ys = (ys.0.min(y), ys.1.max(y));
                }
            }
        }
        if xs.0 > xs.1 {
            xs = (0.0, 1.0);
            ys = (0.0, 1.0);
        }
        if ys.0 == ys.1 {
            ys = (ys.0 - 0.5, ys.1 + 0.5);
        }
        let pad = 0.04 * (ys.1 - ys.0);
        ys = (ys.0 - pad, ys.1 + pad);
        let px = |x: f64| ML + (x - xs.0) / (xs.1 - xs.0).max(1e-300) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - ys.0) / (ys.1 - ys.0).max(1e-300) * (H - MT - MB);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">"#
        );
        let _ = writeln!(svg, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        for t in ticks(xs.0, xs.1) {
            let x = px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{MT}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.4}</text>"##,
                H - MB,
                H - MB + 16.0
            );
        }
        for t in ticks(ys.0, ys.1) {
            let y = py(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{ML}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{t:.4}</text>"##,
                W - MR,
                ML - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<rect x="{ML}" y="{MT}" width="{:.1}" height="{:.1}" fill="none" stroke="#444444"/>"##,
            W - ML - MR,
            H - MT - MB
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 10.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let mut d = String::new();
            for &(x, y) in s.points.iter().filter(|(x, y)| finite(*x) && finite(*y)) {
                let _ = write!(d, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                d.trim_end(),
                s.color
            );
            let ly = MT + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                W - MR - 170.0,
                W - MR - 146.0,
                s.color,
                W - MR - 140.0,
                ly + 4.0,
                esc(&s.label)
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="#888888">config {}</text>"##,
            W - MR,
            H - 10.0,
            esc(config_hash)
        );
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic_and_self_contained() {
        let mut chart = Chart::new("profile", "s", "value");
        chart.push(Series::new("f", vec![(0.0, 1.0), (1.0, 0.0)], 0));
        chart.push(Series::new("Mf", vec![(0.0, 1.0), (1.0, 0.4)], 1));
        let a = chart.render("deadbeef");
        let b = chart.render("deadbeef");
        assert_eq!(a, b);
        assert!(a.contains("config deadbeef"));
        assert!(!a.to_lowercase().contains("date"));
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn degenerate_inputs_still_render() {
        let mut chart = Chart::new("empty", "x", "y");
        chart.push(Series::new("nothing", vec![], 0));
        let s = chart.render("0");
        assert!(s.contains("</svg>"));
        let mut flat = Chart::new("flat", "x", "y");
        flat.push(Series::new("c", vec![(0.0, 2.0), (1.0, 2.0)], 1));
        assert!(flat.render("0").contains("polyline"));
    }
}
