//! Rate constants for `‖h_n - ρ'‖_{L^p(Ω)} ≤ K / n` and their verification.
//!
//! Three cases are covered: `ρ ∈ C^m` with `m ≥ 2` (Taylor remainder with
//! `‖ρ''‖` on `Ω` enlarged by one), softsign, and ELU. The constant for the
//! total-norm form follows from `‖Φ_n‖_total = n + 1/n < 2n`, i.e. `C_p = 2K`.

use std::fmt;

use crate::activation::{Activation, SmoothnessClass};
use crate::calculus::{lp_error, BoxDomain, Exponent, QuadratureGrid, Resolution};
use crate::constructions::diff_quotient_net;
use crate::error::{Error, Result};

/// Tolerance added to every bound check.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateForm {
    Cm,
    Softsign,
    Elu,
}

impl fmt::Display for RateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateForm::Cm => "Cm-case",
            RateForm::Softsign => "softsign-case",
            RateForm::Elu => "ELU-case",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub act: Activation,
    pub p: Exponent,
    /// `Ω = [-B, B]`.
    pub b: f64,
    /// `K` in `bound(n) = K / n`.
    pub per_n: f64,
    /// `C_p` in `error ≤ C_p / ‖Φ_n‖_total`.
    pub c_p: f64,
    pub form: RateForm,
}

impl RateBound {
    pub fn bound(&self, n: u64) -> f64 {
        self.per_n / n as f64
    }
}

/// `max |ρ''|` over `[lo, hi]`: samples at spacing `1e-3`, then golden-section
/// refinement around the best sample.
pub fn second_derivative_sup(act: &Activation, lo: f64, hi: f64) -> f64 {
    let g = |x: f64| act.derivatives(x, 2)[2].abs();
    let steps = (((hi - lo) / 1e-3).ceil() as usize).max(1);
    let h = (hi - lo) / steps as f64;
    let (mut best_x, mut best) = (lo, g(lo));
    for i in 1..=steps {
        let x = lo + h * i as f64;
        let v = g(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - h).max(lo), (best_x + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) >= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(g(0.5 * (a + b)))
}

/// Closed-form constant for `act`, `p` and `Ω = [-B, B]`.
pub fn bound_constant(act: &Activation, p: Exponent, b: f64) -> Result<RateBound> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("B must be positive".into()));
    }
    let (per_n, form) = match act {
        Activation::Elu => {
            let k = match p {
                Exponent::Infinity => 1.0,
                Exponent::Finite(p) => (1.0 / (p + 1.0) + 1.0 / (2f64.powf(p) * p)).powf(1.0 / p),
            };
            (k, RateForm::Elu)
        }
        Activation::Softsign => {
            let s: f64 = 64.0 / 27.0;
            let k = match p {
                Exponent::Infinity => s,
                Exponent::Finite(p) => ((2.0 + 2.0 * s.powf(p)) / (3.0 * p - 1.0)).powf(1.0 / p),
            };
            (k, RateForm::Softsign)
        }
        other => {
            let smooth = other.smoothness();
            let c2 = match smooth.class {
                SmoothnessClass::Analytic => true,
                SmoothnessClass::Finite(m) => m >= 2,
            };
            if !c2 {
                return Err(Error::UnsupportedRate(other.to_string()));
            }
            // Ω̃ ⊂ [-B - 1, B + 1] for every n ≥ 1
            let sup = second_derivative_sup(other, -b - 1.0, b + 1.0);
            let k = match p {
                Exponent::Infinity => sup / 2.0,
                Exponent::Finite(p) => sup / 2.0 * (2.0 * b).powf(1.0 / p),
            };
            (k, RateForm::Cm)
        }
    };
    Ok(RateBound { act: *act, p, b, per_n, c_p: 2.0 * per_n, form })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRecord {
    pub n: u64,
    pub total_norm: f64,
    pub measured_error: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `‖h_n - ρ'‖_{L^p}` on `grid`.
pub fn measure(act: &Activation, n: u64, p: Exponent, grid: &QuadratureGrid) -> Result<f64> {
    let net = diff_quotient_net(n)?;
    lp_error(|x| net.realize_scalar(act, x).expect("1-d input"), |x| act.derivative(x[0]), p, grid)
}

/// Grid on `[-B, B]` with panel edges at the kinks of `|h_n - ρ'|`: the kinks
/// of `ρ` and their shifts by `-1/n`, plus one sign change of `h_n - ρ'` per
/// interval between them when the ends disagree in sign.
pub fn rate_grid(act: &Activation, n: u64, b: f64, resolution: Resolution) -> Result<QuadratureGrid> {
    let net = diff_quotient_net(n)?;
    let diff = |x: f64| net.realize_scalar(act, &[x]).expect("1-d input") - act.derivative(x);
    let shift = 1.0 / n as f64;
    let mut breaks: Vec<f64> = act.smoothness().kinks.iter().flat_map(|&k| [k, k - shift]).collect();
    breaks.extend([-b, b]);
    breaks.retain(|x| (-b..=b).contains(x));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut roots = Vec::new();
    for w in breaks.windows(2) {
        let pad = (w[1] - w[0]) * 1e-9;
        let (mut lo, mut hi) = (w[0] + pad, w[1] - pad);
        let (dlo, dhi) = (diff(lo), diff(hi));
        if dlo * dhi >= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (diff(mid) < 0.0) == (dlo < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    breaks.extend(roots);
    QuadratureGrid::with_breaks(BoxDomain::new(b, 1), resolution, &breaks)
}

/// One record per `n`, in the given order, each measured on [`rate_grid`].
pub fn verify_rate(act: &Activation, p: Exponent, b: f64, ns: &[u64], resolution: Resolution) -> Result<Vec<RateRecord>> {
    let rb = bound_constant(act, p, b)?;
    ns.iter()
        .map(|&n| {
            let grid = rate_grid(act, n, b, resolution)?;
            let measured_error = measure(act, n, p, &grid)?;
            let bound = rb.bound(n);
            Ok(RateRecord {
                n,
                total_norm: diff_quotient_net(n)?.total_norm().value(),
                measured_error,
                bound,
                pass: measured_error <= bound + BOUND_SLACK,
            })
        })
        .collect()
}

/// `max |h_n(x) - ρ'(x)|` over grid nodes with `x ≥ 0`.
pub fn nonnegative_branch_error(act: &Activation, n: u64, grid: &QuadratureGrid) -> Result<f64> {
    let net = diff_quotient_net(n)?;
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        if x[0] >= 0.0 {
            worst = worst.max((net.realize_scalar(act, x)? - act.derivative(x[0])).abs());
        }
    }
    Ok(worst)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
