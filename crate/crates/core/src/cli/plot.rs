//! Self-contained SVG line and scatter charts.

use std::fmt::Write as _;

use super::output::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x: String,
    pub ys: Vec<String>,
    pub logx: bool,
    pub logy: bool,
    pub scatter: bool,
    pub title: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = if log { v.log10() } else { v };
            if t.is_finite() {
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Some(Axis { lo, hi, log })
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let t = if self.log { v.log10() } else { v };
        t.is_finite().then(|| (t - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                let step = ((b - a) / 6 + 1) as usize;
                return (a..=b).step_by(step).map(|e| 10f64.powi(e)).collect();
            }
            return vec![10f64.powf(self.lo), 10f64.powf(self.hi)];
        }
        (0..=5).map(|i| self.lo + (self.hi - self.lo) * f64::from(i) / 5.0).collect()
    }
}

/// Renders the chart; errors name missing columns or empty data.
pub fn render(table: &Table, spec: &PlotSpec) -> Result<String, String> {
    let xi = table.column(&spec.x).ok_or_else(|| format!("missing column {:?}", spec.x))?;
    let mut series = Vec::new();
    for y in &spec.ys {
        let yi = table.column(y).ok_or_else(|| format!("missing column {y:?}"))?;
        series.push((y.as_str(), table.values(yi)));
    }
    let xs = table.values(xi);
    let xaxis = Axis::fit(xs.iter().copied(), spec.logx).ok_or("no plottable x values")?;
    let yaxis = Axis::fit(series.iter().flat_map(|(_, v)| v.iter().copied()), spec.logy).ok_or("no plottable y values")?;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| xaxis.frac(v).map(|f| LEFT + f * pw);
    let py = |v: f64| yaxis.frac(v).map(|f| TOP + (1.0 - f) * ph);

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(&spec.title)).unwrap();
    writeln!(
        s,
        r#"<polyline points="{LEFT:.2},{TOP:.2} {LEFT:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    )
    .unwrap();
    for t in xaxis.ticks() {
        if let Some(x) = px(t) {
            writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0).unwrap();
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, label(t)).unwrap();
        }
    }
    for t in yaxis.ticks() {
        if let Some(y) = py(t) {
            writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t)).unwrap();
        }
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0, escape(&spec.x)).unwrap();

    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<(f64, f64)> =
            xs.iter().zip(ys).filter_map(|(&x, &y)| Some((px(x)?, py(y)?))).collect();
        if spec.scatter {
            for (x, y) in &points {
                writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#).unwrap();
            }
        } else {
            let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        }
        let ly = TOP + 12.0 + 14.0 * k as f64;
        writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, LEFT + pw - 150.0, ly - 9.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, LEFT + pw - 135.0, escape(name)).unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
