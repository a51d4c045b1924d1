//! Explicit network sequences whose limits are not realizations.
//!
//! * [`diff_quotient_net`]: `h_n(x) = n ρ(x + 1/n) - n ρ(x)`, converging to `ρ'`.
//! * [`covering_net`]: a width-one network `J` whose image covers `[-D, D]`.
//! * [`thm1_sequence`]: `f_n = h_n ∘ J` against the target `ρ' ∘ J`.
//! * [`projection_net`]: width-one networks approximating `x ↦ x_i` in `W^{k,p}`.
//! * [`thm2_sequence`]: analytic case, converging to the unbounded `F(x) = ρ(x₁) + ρ'(z₀) x₁`.

use std::sync::Arc;

use crate::activation::Activation;
use crate::calculus::{sobolev_error, BoxDomain, Exponent, Jet, JetField, JetLayout, QuadratureGrid, Realization, Resolution, SobolevSpec};
use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use crate::training::targets::PiecewiseTarget;

/// Which non-network function a [`TargetFunction`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    RhoPrimeComposedJ,
    FAnalytic,
    Projection,
    NetOnProjection,
    Synthetic,
}

impl TargetKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TargetKind::RhoPrimeComposedJ => "rho-prime-composed-J",
            TargetKind::FAnalytic => "F-analytic",
            TargetKind::Projection => "projection",
            TargetKind::NetOnProjection => "net-on-projection",
            TargetKind::Synthetic => "synthetic",
        }
    }
}

/// Closed-form targets with exact jets.
#[derive(Debug, Clone)]
pub enum TargetFunction {
    /// `x ↦ ρ'(J(x))` with `J` the realization of `inner`.
    RhoPrimeComposed { act: Activation, inner: Network },
    /// `x ↦ ρ(x_coord) + ρ'(z₀) x_coord` on `ℝ^dim`.
    Analytic { act: Activation, z0: f64, dim: usize, coord: usize },
    /// `P_coord(x) = x_coord` on `ℝ^dim`.
    Projection { dim: usize, coord: usize },
    /// `R(net) ∘ P_coord` for a one-input network.
    NetOnProjection { act: Activation, net: Network, dim: usize, coord: usize },
    /// One-dimensional piecewise polynomial.
    Piecewise(PiecewiseTarget),
}

impl TargetFunction {
    pub fn kind(&self) -> TargetKind {
        match self {
            TargetFunction::RhoPrimeComposed { .. } => TargetKind::RhoPrimeComposedJ,
            TargetFunction::Analytic { .. } => TargetKind::FAnalytic,
            TargetFunction::Projection { .. } => TargetKind::Projection,
            TargetFunction::NetOnProjection { .. } => TargetKind::NetOnProjection,
            TargetFunction::Piecewise(_) => TargetKind::Synthetic,
        }
    }

    /// `ρ'` on the real line.
    pub fn activation_derivative(act: Activation) -> TargetFunction {
        let identity = Network::new(1, vec![Layer::from_rows(&[&[1.0]], &[0.0]).expect("1x1")]).expect("valid");
        TargetFunction::RhoPrimeComposed { act, inner: identity }
    }

    /// Pointwise value, computed without jets.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            TargetFunction::RhoPrimeComposed { act, inner } => Ok(act.derivative(inner.realize_scalar(act, x)?)),
            TargetFunction::Analytic { act, z0, coord, .. } => Ok(act.eval(x[*coord]) + act.derivative(*z0) * x[*coord]),
            TargetFunction::Projection { coord, .. } => Ok(x[*coord]),
            TargetFunction::NetOnProjection { act, net, coord, .. } => net.realize_scalar(act, &[x[*coord]]),
            TargetFunction::Piecewise(t) => Ok(t.eval(x[0])),
        }
    }
}

impl JetField for TargetFunction {
    fn input_dim(&self) -> usize {
        match self {
            TargetFunction::RhoPrimeComposed { inner, .. } => inner.input_dim(),
            TargetFunction::Analytic { dim, .. }
            | TargetFunction::Projection { dim, .. }
            | TargetFunction::NetOnProjection { dim, .. } => *dim,
            TargetFunction::Piecewise(_) => 1,
        }
    }

    fn jet(&self, x: &[f64], layout: &Arc<JetLayout>) -> Result<Jet> {
        if x.len() != self.input_dim() {
            return Err(Error::InputShape { expected: self.input_dim(), got: x.len() });
        }
        let order = layout.order();
        match self {
            TargetFunction::RhoPrimeComposed { act, inner } => {
                let j = inner.realize_multijet(act, x, layout)?;
                let derivs = act.derivatives(j.value(), order + 1);
                Ok(j.compose(&derivs[1..]))
            }
            TargetFunction::Analytic { act, z0, coord, .. } => {
                let t = Jet::variable(layout, x[*coord], *coord);
                let rho = t.compose(&act.derivatives(x[*coord], order));
                Ok(rho.add(&t.scale(act.derivative(*z0))))
            }
            TargetFunction::Projection { coord, .. } => Ok(Jet::variable(layout, x[*coord], *coord)),
            TargetFunction::NetOnProjection { act, net, coord, .. } => {
                let input = Jet::variable(layout, x[*coord], *coord);
                Ok(net.realize_jets(act, &[input])?.remove(0))
            }
            TargetFunction::Piecewise(t) => {
                // composing the identity jet with f yields the jet of f
                Ok(Jet::variable(layout, x[0], 0).compose(&t.derivatives(x[0], order)))
            }
        }
    }
}

/// `Φ_n = ((1;1), (1/n;0)), ((n, -n), 0)` in `NN(1,2,1)`.
pub fn diff_quotient_net(n: u64) -> Result<Network> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let nf = n as f64;
    Network::new(
        1,
        vec![
            Layer::from_rows(&[&[1.0], &[1.0]], &[1.0 / nf, 0.0])?,
            Layer::from_rows(&[&[nf, -nf]], &[0.0])?,
        ],
    )
}

/// Samples of `x₁ ∈ [-B, B]` used for range checks (includes both endpoints).
fn range_samples(b: f64) -> impl Iterator<Item = f64> {
    const N: u32 = 20_000;
    (0..=N).map(move |i| -b + 2.0 * b * f64::from(i) / f64::from(N))
}

fn sampled_range(net: &Network, act: &Activation, d: usize, b: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut x = vec![0.0; d];
    for t in range_samples(b) {
        x[0] = t;
        let v = net.realize_scalar(act, &x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Width-one network `J ∈ NN(d, 1, …, 1)` with `L - 1` layers whose image of
/// `[-B, B]^d` contains `[-D, D]`.
///
/// Hidden layers are scaled so each pre-activation range has magnitude one;
/// the final affine layer maps the sampled range onto a slight enlargement of
/// `[-D, D]`. The result is re-checked by dense sampling.
pub fn covering_net(act: &Activation, d: usize, layers: usize, b: f64, dd: f64) -> Result<Network> {
    if layers < 2 {
        return Err(Error::InvalidArgument("the covering construction needs L >= 2".into()));
    }
    if d == 0 || !(b > 0.0) || !(dd > 0.0) {
        return Err(Error::InvalidArgument("need d >= 1, B > 0 and D > 0".into()));
    }
    let first_row = |s: f64| {
        let mut row = vec![0.0; d];
        row[0] = s;
        row
    };
    if layers == 2 {
        let layer = Layer::new(1, d, first_row(dd / b), vec![0.0])?;
        return Network::new(d, vec![layer]);
    }
    if act.smoothness().order() == 0 {
        return Err(Error::ConstructionFailure(format!("{act} is not C^1; no covering interval")));
    }
    let mut hidden = vec![Layer::new(1, d, first_row(1.0 / b), vec![0.0])?];
    // the network built so far, ending in an affine layer with the current pre-activation
    for _ in 2..layers - 1 {
        let probe = Network::new(d, hidden.clone())?;
        let (lo, hi) = sampled_image(&probe, act, d, b)?;
        let scale = 1.0 / lo.abs().max(hi.abs());
        if !scale.is_finite() {
            return Err(Error::ConstructionFailure(format!("degenerate hidden range [{lo}, {hi}]")));
        }
        hidden.push(Layer::new(1, 1, vec![scale], vec![0.0])?);
    }
    let probe = Network::new(d, hidden.clone())?;
    let (lo, hi) = sampled_image(&probe, act, d, b)?;
    let width = hi - lo;
    if !(width > 1e-12) {
        return Err(Error::ConstructionFailure(format!("activated range [{lo}, {hi}] is degenerate")));
    }
    let a = 2.0 * dd * (1.0 + 1e-9) / width;
    let bias = -a * 0.5 * (lo + hi);
    let mut layers_out = hidden;
    layers_out.push(Layer::new(1, 1, vec![a], vec![bias])?);
    let net = Network::new(d, layers_out)?;
    let (jlo, jhi) = sampled_range(&net, act, d, b)?;
    if jlo > -dd || jhi < dd {
        return Err(Error::ConstructionFailure(format!("J covers [{jlo}, {jhi}], not [-{dd}, {dd}]")));
    }
    Ok(net)
}

/// Range of `ρ` applied to the output of `probe` (whose last layer is affine).
fn sampled_image(probe: &Network, act: &Activation, d: usize, b: f64) -> Result<(f64, f64)> {
    // ρ is monotone on every catalog entry, but sample anyway
    let mut out = (f64::INFINITY, f64::NEG_INFINITY);
    let mut x = vec![0.0; d];
    for t in range_samples(b) {
        x[0] = t;
        let v = act.eval(probe.realize_scalar(act, &x)?);
        out = (out.0.min(v), out.1.max(v));
    }
    Ok(out)
}

/// `(Φ_n ∙ J, ρ' ∘ J)`.
pub fn thm1_sequence(act: &Activation, d: usize, layers: usize, b: f64, n: u64, dd: f64) -> Result<(Network, TargetFunction)> {
    if act.smoothness().order() == 0 {
        return Err(Error::InvalidArgument(format!("{act} is not C^1")));
    }
    let j = covering_net(act, d, layers, b, dd)?;
    let net = Network::concat(&diff_quotient_net(n)?, &j)?;
    Ok((net, TargetFunction::RhoPrimeComposed { act: *act, inner: j }))
}

/// One building block `Φ^C` of the projection approximator.
fn projection_block(act: &Activation, d: usize, coord: usize, c: f64, z0: f64) -> Result<Network> {
    let rho = act.eval(z0);
    let drho = act.derivative(z0);
    let mut row = vec![0.0; d];
    row[coord] = 1.0 / c;
    Network::new(
        d,
        vec![
            Layer::new(1, d, row, vec![z0])?,
            Layer::new(1, 1, vec![c / drho], vec![-c * rho / drho])?,
        ],
    )
}

/// Network `Φ₂^C ∙ ⋯ ∙ Φ₂^C ∙ Φ₁^C` with `layers` layers for a fixed `C`.
pub fn projection_candidate(act: &Activation, d: usize, layers: usize, coord: usize, c: f64) -> Result<Network> {
    if layers < 2 {
        return Err(Error::InvalidArgument("projection networks need L >= 2".into()));
    }
    if coord >= d {
        return Err(Error::InvalidArgument(format!("coordinate {coord} out of range for d = {d}")));
    }
    let z0 = act.find_z0()?;
    let mut net = projection_block(act, d, coord, c, z0)?;
    let inner = projection_block(act, 1, 0, c, z0)?;
    for _ in 2..layers {
        net = Network::concat(&inner, &net)?;
    }
    Ok(net)
}

/// Outcome of the `C`-doubling search.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub net: Network,
    pub c: f64,
    pub error: f64,
    /// `(C, measured error)` for every tried `C`.
    pub history: Vec<(f64, f64)>,
}

/// Request for [`projection_net`].
#[derive(Debug, Clone, Copy)]
pub struct ProjectionRequest {
    pub d: usize,
    pub layers: usize,
    /// 0-based coordinate index.
    pub coord: usize,
    pub b: f64,
    pub k: usize,
    pub p: Exponent,
    pub eps: f64,
    pub resolution: Resolution,
}

const MAX_SCALE: f64 = 1e12;

/// Doubles `C` from 1 until `‖R(Φ^C) - P_i‖_{W^{k,p}} ≤ ε` on the grid.
pub fn projection_net(act: &Activation, req: &ProjectionRequest) -> Result<ProjectionResult> {
    let s = act.smoothness();
    if !(s.is_analytic() && s.bounded && s.all_derivatives_bounded) {
        return Err(Error::InvalidArgument(format!("{act} is not analytic and bounded with bounded derivatives")));
    }
    if !(req.eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let domain = BoxDomain::new(req.b, req.d);
    let grid = QuadratureGrid::new(domain, req.resolution)?;
    let spec = SobolevSpec { order: req.k, p: req.p, domain, resolution: req.resolution };
    let target = TargetFunction::Projection { dim: req.d, coord: req.coord };
    let mut history = Vec::new();
    let mut c = 1.0;
    let mut best = f64::INFINITY;
    while c <= MAX_SCALE {
        let net = projection_candidate(act, req.d, req.layers, req.coord, c)?;
        let err = sobolev_error(&Realization::new(&net, *act), &target, &spec, &grid)?;
        history.push((c, err));
        best = best.min(err);
        if err <= req.eps {
            return Ok(ProjectionResult { net, c, error: err, history });
        }
        c *= 2.0;
    }
    Err(Error::ConstructionFailure(format!(
        "no C <= {MAX_SCALE:e} reached error {:e}; best {best:e}",
        req.eps
    )))
}

/// `Φ_n^1 = ((1; 1/n), (0; z₀)), ((1, n), -n ρ(z₀))` in `NN(1,2,1)`.
pub fn analytic_outer_net(act: &Activation, n: u64) -> Result<Network> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let z0 = act.find_z0()?;
    let nf = n as f64;
    Network::new(
        1,
        vec![
            Layer::from_rows(&[&[1.0], &[1.0 / nf]], &[0.0, z0])?,
            Layer::from_rows(&[&[1.0, nf]], &[-nf * act.eval(z0)])?,
        ],
    )
}

/// Member `n` of the analytic-case sequence.
#[derive(Debug, Clone)]
pub struct AnalyticSequenceMember {
    pub net: Network,
    pub outer: Network,
    pub projection: ProjectionResult,
    pub target: TargetFunction,
}

/// `Φ_n = Φ_n^1 ∙ Φ_n^2` with `Φ_n^2` a projection approximator to accuracy `1/n`,
/// and the target `F(x) = ρ(x₁) + ρ'(z₀) x₁`.
pub fn thm2_sequence(
    act: &Activation,
    d: usize,
    layers: usize,
    b: f64,
    k: usize,
    p: Exponent,
    n: u64,
    resolution: Resolution,
) -> Result<AnalyticSequenceMember> {
    if layers < 3 {
        return Err(Error::InvalidArgument("the analytic sequence needs L >= 3".into()));
    }
    let outer = analytic_outer_net(act, n)?;
    let req = ProjectionRequest { d, layers: layers - 1, coord: 0, b, k, p, eps: 1.0 / n as f64, resolution };
    let projection = projection_net(act, &req)?;
    let net = Network::concat(&outer, &projection.net)?;
    let target = TargetFunction::Analytic { act: *act, z0: act.find_z0()?, dim: d, coord: 0 };
    Ok(AnalyticSequenceMember { net, outer, projection, target })
}

/// `sup |R(Φ)|` bound for `L ≥ 2` from a bounded activation: `sup|ρ| Σ_j |A_L[0,j]| + |b_L|`.
pub fn realization_bound(act: &Activation, net: &Network) -> Option<f64> {
    let sup = act.smoothness().sup_bound?;
    let last = net.layers().last()?;
    if net.layers().len() < 2 {
        return None;
    }
    Some(sup * last.row(0).iter().map(|v| v.abs()).sum::<f64>() + last.bias()[0].abs())
}
