//! Activation functions with derivatives of any order.
//!
//! Every derivative is closed-form per branch. Piecewise entries (ReLU, ELU,
//! softsign, ISRLU) use the right-hand branch at their kink at 0.

use std::fmt;
use std::str::FromStr;

use crate::calculus::jet::{factorial, Jet, JetLayout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `ρ(x) = x`; only used for sanity checks.
    Linear,
    Relu,
    Elu,
    Softsign,
    /// Inverse square root linear unit with shape parameter `a > 0`.
    Isrlu { a: f64 },
    /// Inverse square root unit with shape parameter `a > 0`.
    Isru { a: f64 },
    Sigmoid,
    Tanh,
    Arctan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothnessClass {
    /// `ρ ∈ C^m \ C^{m+1}`.
    Finite(usize),
    Analytic,
}

/// Table entry describing regularity and boundedness of an activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothness {
    pub class: SmoothnessClass,
    pub bounded: bool,
    /// `sup |ρ|` when bounded.
    pub sup_bound: Option<f64>,
    /// `ρ^{(m)}` is absolutely continuous with a locally integrable weak derivative.
    pub weak_next_derivative: bool,
    /// Whether every derivative is bounded on ℝ.
    pub all_derivatives_bounded: bool,
    /// `‖ρ''‖_∞` over ℝ where a closed form is known.
    pub second_derivative_sup: Option<f64>,
    pub kinks: Vec<f64>,
}

impl Smoothness {
    pub fn is_analytic(&self) -> bool {
        self.class == SmoothnessClass::Analytic
    }

    /// Classical differentiability order, `usize::MAX` for analytic entries.
    pub fn order(&self) -> usize {
        match self.class {
            SmoothnessClass::Finite(m) => m,
            SmoothnessClass::Analytic => usize::MAX,
        }
    }

    /// Largest Sobolev order along which difference quotients of `ρ'` converge.
    pub fn max_sobolev_order(&self) -> usize {
        match self.class {
            SmoothnessClass::Finite(0) => 0,
            SmoothnessClass::Finite(m) if self.weak_next_derivative => m,
            SmoothnessClass::Finite(m) => m - 1,
            SmoothnessClass::Analytic => usize::MAX,
        }
    }
}

// sup |ρ''| for x/sqrt(1+x^2): attained at x = 1/2, 3 * (1/2) * (5/4)^{-5/2}
fn isru_second_sup(a: f64) -> f64 {
    1.5 * a.sqrt() * 1.25f64.powf(-2.5)
}

impl Activation {
    /// Entries of the catalog, with the default shape parameter.
    pub fn catalog() -> Vec<Activation> {
        vec![
            Activation::Relu,
            Activation::Elu,
            Activation::Softsign,
            Activation::Isrlu { a: 1.0 },
            Activation::Isru { a: 1.0 },
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::Arctan,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Softsign => "softsign",
            Activation::Isrlu { .. } => "isrlu",
            Activation::Isru { .. } => "isru",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Arctan => "arctan",
        }
    }

    /// Same activation with shape parameter `a` (no-op for entries without one).
    pub fn with_shape(self, a: f64) -> Activation {
        match self {
            Activation::Isrlu { .. } => Activation::Isrlu { a },
            Activation::Isru { .. } => Activation::Isru { a },
            other => other,
        }
    }

    pub fn shape(&self) -> Option<f64> {
        match self {
            Activation::Isrlu { a } | Activation::Isru { a } => Some(*a),
            _ => None,
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        use SmoothnessClass::*;
        let piecewise = |m: usize, second: Option<f64>| Smoothness {
            class: Finite(m),
            bounded: false,
            sup_bound: None,
            weak_next_derivative: true,
            all_derivatives_bounded: false,
            second_derivative_sup: second,
            kinks: vec![0.0],
        };
        let analytic = |sup: f64, second: f64| Smoothness {
            class: Analytic,
            bounded: true,
            sup_bound: Some(sup),
            weak_next_derivative: false,
            all_derivatives_bounded: true,
            second_derivative_sup: Some(second),
            kinks: vec![],
        };
        match *self {
            Activation::Linear => Smoothness {
                class: Analytic,
                bounded: false,
                sup_bound: None,
                weak_next_derivative: false,
                all_derivatives_bounded: true,
                second_derivative_sup: Some(0.0),
                kinks: vec![],
            },
            Activation::Relu => piecewise(0, None),
            // ρ'' has a jump at 0 and no classical sup; the weak derivative is bounded by 1 (ELU) and 2 (softsign)
            Activation::Elu => piecewise(1, None),
            Activation::Softsign => Smoothness { bounded: true, sup_bound: Some(1.0), ..piecewise(1, None) },
            Activation::Isrlu { a } => piecewise(2, Some(isru_second_sup(a))),
            Activation::Isru { a } => analytic(1.0 / a.sqrt(), isru_second_sup(a)),
            // σ'' = σ(1-σ)(1-2σ), maximal at σ = (3 ± √3)/6
            Activation::Sigmoid => analytic(1.0, 1.0 / (6.0 * 3f64.sqrt())),
            // tanh'' = -2 tanh sech², maximal at tanh = 1/√3
            Activation::Tanh => analytic(1.0, 4.0 / (3.0 * 3f64.sqrt())),
            // arctan'' = -2x/(1+x²)², maximal at x = 1/√3
            Activation::Arctan => analytic(std::f64::consts::FRAC_PI_2, 3.0 * 3f64.sqrt() / 8.0),
        }
    }

    /// `ρ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Elu => {
                if x >= 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Softsign => x / (1.0 + x.abs()),
            Activation::Isrlu { a } => {
                if x >= 0.0 {
                    x
                } else {
                    x / (1.0 + a * x * x).sqrt()
                }
            }
            Activation::Isru { a } => x / (1.0 + a * x * x).sqrt(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Arctan => x.atan(),
        }
    }

    /// `ρ'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.derivatives(x, 1)[1]
    }

    /// `(ρ(x), ρ'(x), …, ρ^{(order)}(x))`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        self.derivatives_into(x, &mut out);
        out
    }

    /// Fills `out[j] = ρ^{(j)}(x)` for `j < out.len()`.
    pub fn derivatives_into(&self, x: f64, out: &mut [f64]) {
        let order = out.len() - 1;
        out.iter_mut().for_each(|v| *v = 0.0);
        match *self {
            Activation::Linear => linear_branch(x, out),
            Activation::Relu => {
                if x >= 0.0 {
                    linear_branch(x, out);
                }
            }
            Activation::Elu => {
                if x >= 0.0 {
                    linear_branch(x, out);
                } else {
                    let e = x.exp();
                    out[0] = x.exp_m1();
                    out[1..].iter_mut().for_each(|v| *v = e);
                }
            }
            Activation::Softsign => {
                // x ≥ 0: 1 - 1/(1+x); x < 0: -1 + 1/(1-x)
                out[0] = x / (1.0 + x.abs());
                let base = 1.0 / (1.0 + x.abs());
                let mut pow = base;
                for j in 1..=order {
                    pow *= base;
                    let mag = factorial(j) * pow;
                    out[j] = if x >= 0.0 && j % 2 == 0 { -mag } else { mag };
                }
            }
            Activation::Isrlu { a } => {
                if x >= 0.0 {
                    linear_branch(x, out);
                } else {
                    isru_derivatives(a, x, out);
                }
            }
            Activation::Isru { a } => isru_derivatives(a, x, out),
            Activation::Sigmoid => sigmoid_derivatives(x, out),
            Activation::Tanh => {
                // tanh(x) = 2σ(2x) - 1
                sigmoid_derivatives(2.0 * x, out);
                out[0] = x.tanh();
                let mut scale = 2.0;
                for v in out.iter_mut().skip(1) {
                    scale *= 2.0;
                    *v *= scale;
                }
            }
            Activation::Arctan => {
                out[0] = x.atan();
                if order >= 1 {
                    // ρ' = 1/u with u = 1 + (x+t)^2
                    let layout = JetLayout::univariate(order - 1);
                    let t = Jet::variable(&layout, x, 0);
                    let u = t.mul(&t).add_scalar(1.0);
                    let u0 = u.value();
                    let recip: Vec<f64> = (0..order)
                        .map(|j| sign(j) * factorial(j) / u0.powi(j as i32 + 1))
                        .collect();
                    let d = u.compose(&recip).derivatives();
                    out[1..].copy_from_slice(&d);
                }
            }
        }
    }

    /// Jet `(ρ(x), ρ'(x), …, ρ^{(order)}(x))`.
    pub fn eval_jet(&self, x: f64, order: usize) -> Jet {
        Jet::from_derivatives(&self.derivatives(x, order))
    }

    /// Point `z₀` of the grid `-10, -10 + 10⁻³, …, 10` maximising `|ρ'|`.
    pub fn find_z0(&self) -> Result<f64> {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=20_000u32 {
            let z = (f64::from(i) - 10_000.0) * 1e-3;
            let d = self.derivative(z).abs();
            if d > best.0 {
                best = (d, z);
            }
        }
        if best.0 < 1e-12 {
            return Err(Error::DegenerateActivation(self.to_string()));
        }
        Ok(best.1)
    }
}

fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn linear_branch(x: f64, out: &mut [f64]) {
    out[0] = x;
    if out.len() > 1 {
        out[1] = 1.0;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// σ^{(n)} = P_n(σ) with P_0(s) = s and P_{n+1} = P_n'(s)·s(1-s).
///
/// Evaluated at `-|x|` where `σ` is small and accurate, then mapped back
/// through `σ^{(n)}(-x) = (-1)^{n+1} σ^{(n)}(x)`.
fn sigmoid_derivatives(x: f64, out: &mut [f64]) {
    out[0] = sigmoid(x);
    let order = out.len() - 1;
    if order == 0 {
        return;
    }
    let s = sigmoid(-x.abs());
    // coefficients of P_n in powers of s
    let mut poly = vec![0.0, 1.0];
    for n in 1..=order {
        let mut deriv = vec![0.0; poly.len().saturating_sub(1).max(1)];
        for (k, c) in poly.iter().enumerate().skip(1) {
            deriv[k - 1] = k as f64 * c;
        }
        // multiply by s - s^2
        let mut next = vec![0.0; deriv.len() + 2];
        for (k, c) in deriv.iter().enumerate() {
            next[k + 1] += c;
            next[k + 2] -= c;
        }
        poly = next;
        let value = poly.iter().rev().fold(0.0, |acc, c| acc * s + c);
        out[n] = if x > 0.0 && n % 2 == 0 { -value } else { value };
    }
}

/// Derivatives of `x (1 + a x²)^{-1/2}` through jet composition.
fn isru_derivatives(a: f64, x: f64, out: &mut [f64]) {
    let order = out.len() - 1;
    let layout = JetLayout::univariate(order);
    let t = Jet::variable(&layout, x, 0);
    let u = t.mul(&t).scale(a).add_scalar(1.0);
    let u0 = u.value();
    // d^j/du^j u^{-1/2}
    let mut coef = 1.0;
    let mut g = Vec::with_capacity(order + 1);
    for j in 0..=order {
        g.push(coef * u0.powf(-0.5 - j as f64));
        coef *= -0.5 - j as f64;
    }
    let r = u.compose(&g).mul(&t);
    out.copy_from_slice(&r.derivatives());
    out[0] = x / (1.0 + a * x * x).sqrt();
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape() {
            Some(a) if a != 1.0 => write!(f, "{}:{}", self.name(), a),
            _ => write!(f, "{}", self.name()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    /// Parses `name` or `name:a` (shape parameter for ISRU/ISRLU).
    fn from_str(s: &str) -> Result<Self> {
        let (name, shape) = match s.split_once(':') {
            Some((n, a)) => {
                let a: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad shape parameter in {s:?}")))?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidArgument(format!("shape parameter must be positive, got {a}")));
                }
                (n, Some(a))
            }
            None => (s, None),
        };
        let act = match name.to_ascii_lowercase().as_str() {
            "linear" | "identity" => Activation::Linear,
            "relu" => Activation::Relu,
            "elu" => Activation::Elu,
            "softsign" => Activation::Softsign,
            "isrlu" => Activation::Isrlu { a: 1.0 },
            "isru" => Activation::Isru { a: 1.0 },
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "arctan" | "atan" => Activation::Arctan,
            other => return Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        };
        match (act.shape(), shape) {
            (None, Some(_)) => Err(Error::InvalidArgument(format!("{name} takes no shape parameter"))),
            (_, Some(a)) => Ok(act.with_shape(a)),
            _ => Ok(act),
        }
    }
}
