//! Composite Gauss–Legendre grids on boxes `[-B, B]^d`.

use crate::error::{Error, Result};

/// Panels per axis and Gauss nodes per panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub panels: usize,
    pub nodes: usize,
}

impl Resolution {
    pub const fn new(panels: usize, nodes: usize) -> Self {
        Self { panels, nodes }
    }

    /// Default for one-dimensional acceptance runs.
    pub const DEFAULT_1D: Resolution = Resolution::new(2000, 5);
    /// 300 nodes per axis.
    pub const DEFAULT_2D: Resolution = Resolution::new(60, 5);

    pub fn default_for(dim: usize) -> Resolution {
        match dim {
            1 => Self::DEFAULT_1D,
            2 => Self::DEFAULT_2D,
            _ => Resolution::new(12, 4),
        }
    }

    pub fn refined(self, factor: usize) -> Resolution {
        Resolution::new(self.panels * factor, self.nodes)
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.panels * self.nodes
    }
}

/// `[-half_width, half_width]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub half_width: f64,
    pub dim: usize,
}

impl BoxDomain {
    pub fn new(half_width: f64, dim: usize) -> Self {
        Self { half_width, dim }
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }
}

/// Tensor-product quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    kink_offsets: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

impl QuadratureGrid {
    /// Composite rule with interior panel breakpoints shifted by an irrational
    /// per-axis offset (`√2·10⁻⁷·(axis+1)`, capped at panel/10³), so no node
    /// lands on a rational kink preimage. The outer breakpoints stay at `±B`.
    pub fn new(domain: BoxDomain, res: Resolution) -> Result<Self> {
        Self::build(domain, res, &[])
    }

    /// One-dimensional rule whose panels are additionally split at `extra`, so
    /// that known kinks of an integrand fall on panel edges.
    pub fn with_breaks(domain: BoxDomain, res: Resolution, extra: &[f64]) -> Result<Self> {
        if domain.dim != 1 {
            return Err(Error::UnsupportedDimension(domain.dim));
        }
        Self::build(domain, res, extra)
    }

    fn build(domain: BoxDomain, res: Resolution, extra: &[f64]) -> Result<Self> {
        let dim = domain.dim;
        if dim == 0 || dim > 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if res.panels < 1 || res.nodes < 2 {
            return Err(Error::InvalidArgument("need at least 1 panel and 2 nodes per panel".into()));
        }
        if !(domain.half_width > 0.0 && domain.half_width.is_finite()) {
            return Err(Error::InvalidArgument("box half-width must be positive".into()));
        }
        let b = domain.half_width;
        let h = 2.0 * b / res.panels as f64;
        let (gx, gw) = gauss_legendre(res.nodes);
        let mut kink_offsets = Vec::with_capacity(dim);
        let mut axes: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(dim);
        for axis in 0..dim {
            let offset = (std::f64::consts::SQRT_2 * 1e-7 * (axis + 1) as f64).min(h * 1e-3);
            kink_offsets.push(offset);
            let breaks: Vec<f64> = (0..=res.panels)
                .map(|i| {
                    if i == 0 {
                        -b
                    } else if i == res.panels {
                        b
                    } else {
                        -b + i as f64 * h + offset
                    }
                })
                .collect();
            let breaks = merge_breaks(breaks, extra, h * 1e-6);
            let mut xs = Vec::with_capacity(res.nodes_per_axis());
            let mut ws = Vec::with_capacity(res.nodes_per_axis());
            for p in 0..breaks.len() - 1 {
                let (lo, hi) = (breaks[p], breaks[p + 1]);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (x, w) in gx.iter().zip(&gw) {
                    xs.push(mid + half * x);
                    ws.push(half * w);
                }
            }
            axes.push((xs, ws));
        }
        let per_axis = axes[0].0.len();
        let total = per_axis.pow(dim as u32);
        let mut points = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            let start = points.len();
            points.resize(start + dim, 0.0);
            for axis in (0..dim).rev() {
                let k = rem % per_axis;
                rem /= per_axis;
                points[start + axis] = axes[axis].0[k];
                w *= axes[axis].1[k];
            }
            weights.push(w);
        }
        Ok(Self { dim, points, weights, kink_offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kink_offsets(&self) -> &[f64] {
        &self.kink_offsets
    }

    /// `Σ w_i f(x_i)`, summed pairwise in node order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = crate::calculus::par_map_nodes(self, |i| self.weights[i] * f(self.point(i)));
        pairwise_sum(&values)
    }
}

/// Inserts interior points of `extra` into the sorted edge list, skipping
/// any within `tol` of an existing edge.
fn merge_breaks(mut edges: Vec<f64>, extra: &[f64], tol: f64) -> Vec<f64> {
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    for &x in extra {
        if !(x > lo + tol && x < hi - tol) {
            continue;
        }
        let at = edges.partition_point(|&e| e < x);
        if (edges[at] - x).abs() > tol && (x - edges[at - 1]).abs() > tol {
            edges.insert(at, x);
        }
    }
    edges
}

/// Pairwise summation in fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
