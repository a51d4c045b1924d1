//! Random piecewise-polynomial targets on `[-B, B]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiecewiseKind {
    /// Continuous, slope jumps at knots.
    Linear,
    /// `C¹`, second-derivative jumps at knots.
    Quadratic,
}

/// `f(x) = c0 + c1 (x - left) + c2 (x - left)²` on `[left, next left)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub coeffs: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTarget {
    kind: PiecewiseKind,
    half_width: f64,
    knots: Vec<f64>,
    segments: Vec<Segment>,
}

fn breakpoints(b: f64, knots: &[f64]) -> Vec<f64> {
    let mut xs = Vec::with_capacity(knots.len() + 2);
    xs.push(-b);
    xs.extend_from_slice(knots);
    xs.push(b);
    xs
}

fn check_knots(b: f64, knots: &[f64], values: usize) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("B must be positive".into()));
    }
    if values != knots.len() + 2 {
        return Err(Error::DimensionMismatch(format!("{} knots need {} values, got {values}", knots.len(), knots.len() + 2)));
    }
    let xs = breakpoints(b, knots);
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("knots must be strictly increasing inside (-B, B)".into()));
    }
    Ok(())
}

impl PiecewiseTarget {
    /// Linear interpolation of `values` at `[-B, knots…, B]`.
    pub fn linear(b: f64, knots: Vec<f64>, values: &[f64]) -> Result<Self> {
        check_knots(b, &knots, values.len())?;
        let xs = breakpoints(b, &knots);
        let segments = xs
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| Segment { left: x[0], coeffs: [v[0], (v[1] - v[0]) / (x[1] - x[0]), 0.0] })
            .collect();
        Ok(Self { kind: PiecewiseKind::Linear, half_width: b, knots, segments })
    }

    /// Antiderivative with `f(-B) = 0` of the piecewise-linear `g` taking
    /// `slopes` at `[-B, knots…, B]`.
    pub fn quadratic(b: f64, knots: Vec<f64>, slopes: &[f64]) -> Result<Self> {
        check_knots(b, &knots, slopes.len())?;
        let xs = breakpoints(b, &knots);
        let mut value = 0.0;
        let mut segments = Vec::with_capacity(xs.len() - 1);
        for (x, g) in xs.windows(2).zip(slopes.windows(2)) {
            let h = x[1] - x[0];
            let curvature = 0.5 * (g[1] - g[0]) / h;
            segments.push(Segment { left: x[0], coeffs: [value, g[0], curvature] });
            value += g[0] * h + curvature * h * h;
        }
        Ok(Self { kind: PiecewiseKind::Quadratic, half_width: b, knots, segments })
    }

    pub fn kind(&self) -> PiecewiseKind {
        self.kind
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Interior knots.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    // right-hand convention at knots; end segments extend beyond [-B, B]
    fn segment(&self, x: f64) -> &Segment {
        let i = self.knots.partition_point(|&k| k <= x);
        &self.segments[i]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = self.segment(x);
        let t = x - s.left;
        s.coeffs[0] + t * (s.coeffs[1] + t * s.coeffs[2])
    }

    /// `(f(x), f'(x), …, f^{(order)}(x))`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        segment_derivatives(self.segment(x), x, order)
    }

    /// Jump `f^{(j)}(k+) - f^{(j)}(k-)` at each interior knot.
    pub fn jumps(&self, j: usize) -> Vec<f64> {
        self.knots
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let right = self.derivatives(k, j)[j];
                let left = segment_derivatives(&self.segments[i], k, j)[j];
                right - left
            })
            .collect()
    }
}

fn segment_derivatives(s: &Segment, x: f64, order: usize) -> Vec<f64> {
    let t = x - s.left;
    let [c0, c1, c2] = s.coeffs;
    let mut out = vec![0.0; order + 1];
    out[0] = c0 + t * (c1 + t * c2);
    if order >= 1 {
        out[1] = c1 + 2.0 * c2 * t;
    }
    if order >= 2 {
        out[2] = 2.0 * c2;
    }
    out
}

/// Up to `num_knots` uniform knots in `(-B, B)`, at least `B/50` apart from
/// each other and from the endpoints.
fn draw_knots<R: Rng>(rng: &mut R, num_knots: usize, b: f64) -> Vec<f64> {
    let gap = b / 50.0;
    let mut knots: Vec<f64> = Vec::with_capacity(num_knots);
    let mut attempts = 0;
    while knots.len() < num_knots && attempts < 1000 * num_knots.max(1) {
        attempts += 1;
        let k = rng.gen_range(-b..b);
        if (k + b) < gap || (b - k) < gap || knots.iter().any(|&q| (q - k).abs() < gap) {
            continue;
        }
        knots.push(k);
    }
    knots.sort_by(f64::total_cmp);
    knots
}

fn check_range(range: (f64, f64)) -> Result<()> {
    if range.0 < range.1 && range.0.is_finite() && range.1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("bad value range [{}, {}]", range.0, range.1)))
    }
}

/// Random continuous piecewise-linear target, deterministic in `seed`.
pub fn gen_piecewise_linear(seed: u64, num_knots: usize, b: f64, value_range: (f64, f64)) -> Result<PiecewiseTarget> {
    check_range(value_range)?;
    let mut rng = rng::stream(seed, rng::streams::TARGET);
    let knots = draw_knots(&mut rng, num_knots, b);
    let values: Vec<f64> = (0..knots.len() + 2).map(|_| rng.gen_range(value_range.0..value_range.1)).collect();
    PiecewiseTarget::linear(b, knots, &values)
}

/// Random `C¹` piecewise-quadratic target: the antiderivative of a random
/// piecewise-linear derivative with values in `slope_range`.
pub fn gen_piecewise_quadratic(seed: u64, num_knots: usize, b: f64, slope_range: (f64, f64)) -> Result<PiecewiseTarget> {
    check_range(slope_range)?;
    let mut rng = rng::stream(seed, rng::streams::TARGET);
    let knots = draw_knots(&mut rng, num_knots, b);
    let slopes: Vec<f64> = (0..knots.len() + 2).map(|_| rng.gen_range(slope_range.0..slope_range.1)).collect();
    PiecewiseTarget::quadratic(b, knots, &slopes)
}
