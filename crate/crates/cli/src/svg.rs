//! Small SVG renderer for the CSV data the subcommands emit.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 56.0;

pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    legend: Vec<(String, String)>,
    title: String,
    labels: (String, String),
}

impl Plot {
    /// Empty ranges are widened so that degenerate data still renders.
    pub fn new(title: &str, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) -> Self {
        let widen = |(a, b): (f64, f64)| {
            if b - a > 0.0 && (b - a).is_finite() {
                (a, b)
            } else {
                let c = if a.is_finite() { a } else { 0.0 };
                (c - 1.0, c + 1.0)
            }
        };
        Self {
            x: widen(x),
            y: widen(y),
            body: String::new(),
            legend: Vec::new(),
            title: title.into(),
            labels: (xlabel.into(), ylabel.into()),
        }
    }

    /// Square plot centred on the origin containing every point.
    pub fn plane(title: &str, points: impl Iterator<Item = (f64, f64)>) -> Self {
        let half = points
            .map(|(x, y)| x.abs().max(y.abs()))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let half = if half > 0.0 { 1.1 * half } else { 1.0 };
        Self::new(title, (-half, half), (-half, half), "x", "y")
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, color: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            b - a,
            d - c
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut path = String::new();
        for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = write!(path, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            path.trim_end()
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, color: &str, cross: bool) {
        let (cx, cy) = (self.px(x), self.py(y));
        if cross {
            let s = 4.0;
            let _ = writeln!(
                self.body,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="2"/>"#,
                cx - s,
                cy - s,
                cx + s,
                cy + s,
                cx - s,
                cy + s,
                cx + s,
                cy - s
            );
        } else {
            let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{color}"/>"#);
        }
    }

    pub fn legend(&mut self, label: &str, color: &str) {
        if !self.legend.iter().any(|(l, _)| l == label) {
            self.legend.push((label.into(), color.into()));
        }
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        s.push_str(&self.body);
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            s,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, t - 20.0, escape(&self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 14.0, escape(&self.labels.0));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.labels.1)
        );
        let ticks = [
            (self.x.0, l, b + 16.0, "start"),
            (self.x.1, r, b + 16.0, "end"),
        ];
        for (v, x, y, anchor) in ticks {
            let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, b, tick(self.y.0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 10.0, tick(self.y.1));
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = t + 16.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, r - 120.0, y - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, r - 104.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    format!("{v:.3e}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
