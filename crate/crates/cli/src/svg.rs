//! Minimal deterministic SVG plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 16.0;
const PAD_T: f64 = 32.0;
const PAD_B: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

pub enum Mark {
    Line,
    Points,
    Steps,
}

pub struct Series {
    pub name: String,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

#[derive(Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn series(mut self, name: &str, mark: Mark, points: Vec<(f64, f64)>) -> Self {
        let points = points
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        self.series.push(Series {
            name: name.into(),
            mark,
            points,
        });
        self
    }

    pub fn hline(mut self, y: f64, label: &str) -> Self {
        if y.is_finite() {
            self.hlines.push((y, label.into()));
        }
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in self.series.iter().flat_map(|s| &s.points) {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        for &(y, _) in &self.hlines {
            b = (b.0, b.1, b.2.min(y), b.3.max(y));
        }
        let widen = |lo: f64, hi: f64| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = widen(b.0, b.1);
        let (y0, y1) = widen(b.2, b.3);
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
        let sy = |y: f64| H - PAD_B - (y - y0) / (y1 - y0) * (H - PAD_T - PAD_B);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        let (bx, by) = (PAD_L, H - PAD_B);
        let _ = writeln!(
            s,
            r#"<path d="M{bx} {PAD_T}V{by}H{}" fill="none" stroke="black"/>"#,
            W - PAD_R
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(fx),
                by + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                bx - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (PAD_L + W - PAD_R) / 2.0,
            H - 10.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            (PAD_T + H - PAD_B) / 2.0,
            esc(&self.y_label)
        );
        for (y, label) in &self.hlines {
            let _ = writeln!(
                s,
                r##"<path d="M{bx} {0:.2}H{1}" stroke="#555" stroke-dasharray="4 3"/><text x="{1}" y="{2:.2}" text-anchor="end">{3}</text>"##,
                sy(*y),
                W - PAD_R,
                sy(*y) - 3.0,
                esc(label)
            );
        }
        for (i, ser) in self.series.iter().enumerate() {
            let c = COLORS[i % COLORS.len()];
            match ser.mark {
                Mark::Points => {
                    for &(x, y) in &ser.points {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{c}" fill-opacity="0.6"/>"#,
                            sx(x),
                            sy(y)
                        );
                    }
                }
                Mark::Line | Mark::Steps => {
                    let mut d = String::new();
                    let mut prev: Option<f64> = None;
                    for &(x, y) in &ser.points {
                        match (prev, &ser.mark) {
                            (None, _) => {
                                let _ = write!(d, "M{:.2} {:.2}", sx(x), sy(y));
                            }
                            (Some(_), Mark::Steps) => {
                                let _ = write!(d, "H{:.2}V{:.2}", sx(x), sy(y));
                            }
                            _ => {
                                let _ = write!(d, "L{:.2} {:.2}", sx(x), sy(y));
                            }
                        }
                        prev = Some(y);
                    }
                    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
                }
            }
            let ly = PAD_T + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{:.2}" width="10" height="10" fill="{c}"/><text x="{}" y="{:.2}">{}</text>"#,
                W - PAD_R - 150.0,
                ly,
                W - PAD_R - 136.0,
                ly + 9.0,
                esc(&ser.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    if t == "-0.000" {
        "0.000".into()
    } else {
        t
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
