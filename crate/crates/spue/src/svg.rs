//! Minimal self-contained SVG line charts for the CLI artifacts. No
//! runtime plotting dependency: axes, ticks, polylines, legend.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot y on a log10 scale (requires positive values; non-positive
    /// points are dropped).
    pub log_y: bool,
}

impl LineChart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            log_y: false,
        }
    }

    pub fn add_series(&mut self, label: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series {
            label: label.to_string(),
            points,
        });
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut x_lo = f64::INFINITY;
        let mut x_hi = f64::NEG_INFINITY;
        let mut y_lo = f64::INFINITY;
        let mut y_hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                let y = if self.log_y {
                    if y <= 0.0 {
                        continue;
                    }
                    y.log10()
                } else {
                    y
                };
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
        if !x_lo.is_finite() || !x_hi.is_finite() {
            (0.0, 1.0, 0.0, 1.0)
        } else {
            let pad = |lo: f64, hi: f64| {
                let span = (hi - lo).max(1e-12);
                (lo - 0.03 * span, hi + 0.03 * span)
            };
            let (x_lo, x_hi) = pad(x_lo, x_hi);
            let (y_lo, y_hi) = pad(y_lo, y_hi);
            (x_lo, x_hi, y_lo, y_hi)
        }
    }

    pub fn render(&self) -> String {
        let (x_lo, x_hi, y_lo, y_hi) = self.bounds();
        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let to_px = |x: f64, y: f64| {
            let px = MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
            let py = MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;
            (px, py)
        };

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // Frame and ticks.
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
        );
        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = x_lo + f * (x_hi - x_lo);
            let yv = y_lo + f * (y_hi - y_lo);
            let (px, _) = to_px(xv, y_lo);
            let (_, py) = to_px(x_lo, yv);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#bbb" stroke-dasharray="3,4"/>"##,
                MARGIN_T,
                MARGIN_T + plot_h
            );
            let _ = writeln!(
                out,
                r##"<line x1="{}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#bbb" stroke-dasharray="3,4"/>"##,
                MARGIN_L,
                MARGIN_L + plot_w
            );
            let _ = writeln!(
                out,
                r#"<text x="{px:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                MARGIN_T + plot_h + 16.0,
                tick_label(xv, false)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                MARGIN_L - 6.0,
                py + 4.0,
                tick_label(yv, self.log_y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (idx, s) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            let mut path = String::new();
            for &(x, y) in &s.points {
                let y = if self.log_y {
                    if y <= 0.0 {
                        continue;
                    }
                    y.log10()
                } else {
                    y
                };
                let (px, py) = to_px(x, y);
                let _ = write!(path, "{px:.2},{py:.2} ");
            }
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                path.trim_end()
            );
            let ly = MARGIN_T + 16.0 + 16.0 * idx as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
                MARGIN_L + plot_w - 150.0,
                MARGIN_L + plot_w - 122.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                MARGIN_L + plot_w - 116.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(out, "</svg>");
        out
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.1}")
    } else if v == 0.0 || (1e-3..1e5).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
