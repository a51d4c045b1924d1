//! Jets, quadrature grids and `L^p` / `W^{k,p}` error estimation.

pub mod jet;
pub mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::network::Network;
pub use jet::{Jet, JetLayout};
pub use quadrature::{pairwise_sum, BoxDomain, QuadratureGrid, Resolution};

/// Lebesgue exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidArgument(format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => {
                let p: f64 = t.parse().map_err(|_| Error::InvalidArgument(format!("bad exponent {s:?}")))?;
                Exponent::finite(p)
            }
        }
    }
}

/// Parameters of a `W^{k,p}([-B,B]^d)` error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevSpec {
    pub order: usize,
    pub p: Exponent,
    pub domain: BoxDomain,
    pub resolution: Resolution,
}

impl SobolevSpec {
    pub fn grid(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::new(self.domain, self.resolution)
    }
}

/// A function on `ℝ^d` that can report all partial derivatives up to a layout's order.
pub trait JetField: Sync {
    fn input_dim(&self) -> usize;

    /// Multivariate jet at `x` in `layout` (which has `input_dim` variables).
    fn jet(&self, x: &[f64], layout: &Arc<JetLayout>) -> Result<Jet>;
}

/// Realization `R_ρ(Φ)` of a scalar-output network.
#[derive(Debug, Clone, Copy)]
pub struct Realization<'a> {
    pub net: &'a Network,
    pub act: Activation,
}

impl<'a> Realization<'a> {
    pub fn new(net: &'a Network, act: Activation) -> Self {
        Self { net, act }
    }
}

impl JetField for Realization<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn jet(&self, x: &[f64], layout: &Arc<JetLayout>) -> Result<Jet> {
        self.net.realize_multijet(&self.act, x, layout)
    }
}

/// Adapter turning a closure into a [`JetField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], &Arc<JetLayout>) -> Result<Jet> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> JetField for FnField<F>
where
    F: Fn(&[f64], &Arc<JetLayout>) -> Result<Jet> + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64], layout: &Arc<JetLayout>) -> Result<Jet> {
        (self.f)(x, layout)
    }
}

/// Evaluates `f` on every node index in parallel; output is in node order.
pub(crate) fn par_map_nodes<T, F>(grid: &QuadratureGrid, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..grid.len()).into_par_iter().with_min_len(256).map(f).collect()
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn checked(node: &[f64], value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { node: node.to_vec(), value })
    }
}

/// Accumulates `|v|^p` (or `max |v|`) over weighted samples.
fn reduce_norm(samples: &[(f64, f64)], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => samples.iter().fold(0.0, |m, (_, v)| m.max(v.abs())),
        Exponent::Finite(p) => {
            let terms: Vec<f64> = samples.iter().map(|(w, v)| w * v.abs().powf(p)).collect();
            pairwise_sum(&terms).powf(1.0 / p)
        }
    }
}

/// `‖f - g‖_{L^p}` on the grid. For `p = ∞` this is the maximum over nodes.
pub fn lp_error<F, G>(f: F, g: G, p: Exponent, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    let samples = par_map_nodes(grid, |i| {
        let x = grid.point(i);
        let fv = checked(x, f(x))?;
        let gv = checked(x, g(x))?;
        Ok((grid.weight(i), fv - gv))
    });
    Ok(reduce_norm(&first_error(samples)?, p))
}

/// Per-multi-index `L^p` errors `‖D^α (f - g)‖`, in the layout's slot order.
pub fn sobolev_components(
    f: &dyn JetField,
    g: &dyn JetField,
    order: usize,
    p: Exponent,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let dim = grid.dim();
    if f.input_dim() != dim || g.input_dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "grid has dimension {dim}, fields have {} and {}",
            f.input_dim(),
            g.input_dim()
        )));
    }
    let layout = JetLayout::new(dim, order);
    let n = layout.len();
    let rows = par_map_nodes(grid, |i| -> Result<Vec<f64>> {
        let x = grid.point(i);
        let a = f.jet(x, &layout)?;
        let b = g.jet(x, &layout)?;
        (0..n)
            .map(|s| {
                let d = a.partial_at_slot(s) - b.partial_at_slot(s);
                checked(x, d)
            })
            .collect()
    });
    let rows = first_error(rows)?;
    Ok((0..n)
        .map(|s| {
            let samples: Vec<(f64, f64)> = rows.iter().enumerate().map(|(i, r)| (grid.weight(i), r[s])).collect();
            reduce_norm(&samples, p)
        })
        .collect())
}

/// `‖f - g‖_{W^{k,p}} = Σ_{|α| ≤ k} ‖D^α (f - g)‖_{L^p}`.
pub fn sobolev_error(f: &dyn JetField, g: &dyn JetField, spec: &SobolevSpec, grid: &QuadratureGrid) -> Result<f64> {
    Ok(sobolev_components(f, g, spec.order, spec.p, grid)?.iter().sum())
}

/// `‖n(ρ^{(l)}(·+1/n) - ρ^{(l)}) - ρ^{(l+1)}‖_{L^p}` on a one-dimensional grid.
pub fn diff_quotient_error(act: &Activation, l: usize, n: u64, p: Exponent, grid: &QuadratureGrid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let nf = n as f64;
    let step = 1.0 / nf;
    lp_error(
        |x| {
            let shifted = act.derivatives(x[0] + step, l)[l];
            let here = act.derivatives(x[0], l + 1);
            nf * (shifted - here[l]) - here[l + 1]
        },
        |_| 0.0,
        p,
        grid,
    )
}
