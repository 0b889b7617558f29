//! Minimal SVG line plots: axes, ticks, legend, log-y, dashed overlays and
//! per-segment color ramps.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dashed: bool,
    pub color: Option<String>,
    /// Color each segment by its position on a blue-to-red ramp.
    pub ramp: bool,
    /// Draw markers instead of a line.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            dashed: false,
            color: None,
            ramp: false,
            markers: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn color(mut self, c: &str) -> Self {
        self.color = Some(c.to_string());
        self
    }

    pub fn ramp(mut self) -> Self {
        self.ramp = true;
        self
    }

    pub fn markers(mut self) -> Self {
        self.markers = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
    /// Vertical reference lines `(x, label)`.
    pub vlines: Vec<(f64, String)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn hline(mut self, y: f64, label: &str) -> Self {
        self.hlines.push((y, label.into()));
        self
    }

    pub fn vline(mut self, x: f64, label: &str) -> Self {
        self.vlines.push((x, label.into()));
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    fn y_of(&self, v: f64) -> Option<f64> {
        if self.log_y {
            (v > 0.0 && v.is_finite()).then(|| v.log10())
        } else {
            v.is_finite().then_some(v)
        }
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if let (true, Some(y)) = (x.is_finite(), self.y_of(y)) {
                    xr = (xr.0.min(x), xr.1.max(x));
                    yr = (yr.0.min(y), yr.1.max(y));
                }
            }
        }
        for (y, _) in &self.hlines {
            if let Some(y) = self.y_of(*y) {
                yr = (yr.0.min(y), yr.1.max(y));
            }
        }
        if !xr.0.is_finite() {
            xr = (0.0, 1.0);
        }
        if !yr.0.is_finite() {
            yr = (0.0, 1.0);
        }
        if xr.1 - xr.0 <= 0.0 {
            xr = (xr.0 - 0.5, xr.1 + 0.5);
        }
        if yr.1 - yr.0 <= 0.0 {
            yr = (yr.0 - 0.5, yr.1 + 0.5);
        }
        if self.log_y {
            yr = (yr.0.floor(), yr.1.ceil());
        } else {
            let pad = 0.05 * (yr.1 - yr.0);
            yr = (yr.0 - pad, yr.1 + pad);
        }
        (xr, yr)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(o, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

        for tx in ticks(x0, x1, 6) {
            let px = sx(tx);
            let _ = writeln!(o, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(o, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(tx));
        }
        let yt: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / 8.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut e = y0;
            while e <= y1 + 1e-9 {
                v.push(e);
                e += step;
            }
            v
        } else {
            ticks(y0, y1, 6)
        };
        for ty in yt {
            let py = sy(ty);
            let label = if self.log_y { format!("1e{}", ty.round() as i64) } else { fmt_tick(ty) };
            let _ = writeln!(o, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(o, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
            let _ = writeln!(o, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, py + 4.0);
        }
        let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, esc(&self.x_label));
        let _ = writeln!(
            o,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        let _ = writeln!(o, r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath><g clip-path="url(#plot)">"#);
        for (y, label) in &self.hlines {
            if let Some(v) = self.y_of(*y) {
                let py = sy(v);
                let _ = writeln!(o, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#555" stroke-dasharray="2 3"/>"##, LEFT + pw);
                let _ = writeln!(o, r##"<text x="{}" y="{:.2}" text-anchor="end" fill="#555">{}</text>"##, LEFT + pw - 4.0, py - 4.0, esc(label));
            }
        }
        for (x, label) in &self.vlines {
            let px = sx(*x);
            let _ = writeln!(o, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#555" stroke-dasharray="2 3"/>"##, TOP + ph);
            let _ = writeln!(o, r##"<text x="{:.2}" y="{}" fill="#555">{}</text>"##, px + 4.0, TOP + 14.0, esc(label));
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let pts: Vec<Option<(f64, f64)>> = s
                .x
                .iter()
                .zip(&s.y)
                .map(|(&x, &y)| self.y_of(y).filter(|_| x.is_finite()).map(|y| (sx(x), sy(y))))
                .collect();
            if s.markers {
                for p in pts.iter().flatten() {
                    let _ = writeln!(o, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, p.0, p.1);
                }
            } else if s.ramp {
                let m = pts.len().max(2) - 1;
                for (k, w) in pts.windows(2).enumerate() {
                    if let (Some(a), Some(b)) = (w[0], w[1]) {
                        let _ = writeln!(
                            o,
                            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"{dash}/>"#,
                            a.0,
                            a.1,
                            b.0,
                            b.1,
                            ramp_color(k as f64 / m as f64)
                        );
                    }
                }
            } else {
                // Break the polyline at points that cannot be drawn
                for run in pts.split(|p| p.is_none()) {
                    if run.len() < 2 {
                        continue;
                    }
                    let path: Vec<String> = run.iter().flatten().map(|p| format!("{:.2},{:.2}", p.0, p.1)).collect();
                    let _ = writeln!(o, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
                }
            }
        }
        let _ = writeln!(o, "</g>");

        let mut ly = TOP + 14.0;
        for (i, s) in self.series.iter().enumerate() {
            if s.label.is_empty() {
                continue;
            }
            let color = if s.ramp {
                ramp_color(0.5)
            } else {
                s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string())
            };
            let lx = LEFT + pw - 150.0;
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(o, r#"<line x1="{lx}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/>"#, ly - 4.0, lx + 24.0, ly - 4.0);
            let _ = writeln!(o, r#"<text x="{}" y="{ly:.2}">{}</text>"#, lx + 30.0, esc(&s.label));
            ly += 16.0;
        }
        o.push_str("</svg>\n");
        o
    }
}

/// Blue (0) to red (1).
pub fn ramp_color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let r = (40.0 + 215.0 * f).round() as u8;
    let b = (255.0 - 215.0 * f).round() as u8;
    let g = (60.0 + 80.0 * (1.0 - (2.0 * f - 1.0).abs())).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut v = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * step {
        v.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    v
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
