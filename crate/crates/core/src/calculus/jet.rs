//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `c_α = D^α f / α!` of a function
//! around a point, for every multi-index `α` with `|α| ≤ order`. Products and
//! compositions with scalar functions are truncated at `order`, which yields
//! exactly the chain-rule (Faà di Bruno) sums without enumerating partitions.

use std::fmt;
use std::sync::Arc;

/// Monomial bookkeeping shared by all jets with the same `(vars, order)`.
#[derive(Debug, PartialEq)]
pub struct JetLayout {
    vars: usize,
    order: usize,
    indices: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    factorials: Vec<f64>,
    /// `(i, j, k)` with `indices[i] + indices[j] == indices[k]`.
    products: Vec<(usize, usize, usize)>,
}

impl JetLayout {
    pub fn new(vars: usize, order: usize) -> Arc<Self> {
        assert!(vars >= 1, "a jet needs at least one variable");
        let mut indices = Vec::new();
        for total in 0..=order {
            let mut current = vec![0; vars];
            push_compositions(total, 0, &mut current, &mut indices);
        }
        let degrees: Vec<usize> = indices.iter().map(|a| a.iter().sum()).collect();
        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&k| factorial(k)).product())
            .collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                let sum: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let k = indices.iter().position(|c| *c == sum).expect("closed under addition");
                products.push((i, j, k));
            }
        }
        Arc::new(Self { vars, order, indices, degrees, factorials, products })
    }

    /// One variable, `order + 1` coefficients.
    pub fn univariate(order: usize) -> Arc<Self> {
        Self::new(1, order)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of coefficients.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Multi-indices in graded order; slot 0 is always the value.
    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn degree(&self, slot: usize) -> usize {
        self.degrees[slot]
    }

    /// `α!` for the multi-index in `slot`.
    pub fn factorial(&self, slot: usize) -> f64 {
        self.factorials[slot]
    }

    pub fn slot_of(&self, alpha: &[usize]) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    /// Slot of the first-order monomial in variable `var`.
    pub fn unit_slot(&self, var: usize) -> usize {
        1 + var
    }

    /// `out += a * b`, truncated.
    pub fn mul_acc(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for &(i, j, k) in &self.products {
            out[k] += a[i] * b[j];
        }
    }

    /// Adjoint of `out += w * z` with respect to `z`: `z_bar += wᵀ out_bar`.
    pub fn mul_adjoint_acc(&self, w: &[f64], out_bar: &[f64], z_bar: &mut [f64]) {
        for &(i, j, k) in &self.products {
            z_bar[j] += w[i] * out_bar[k];
        }
    }

    /// `out = g ∘ a` where `derivs[j] = g^{(j)}(a[0])` for `j = 0..=order`.
    ///
    /// Horner evaluation of `Σ_j derivs[j]/j! δ^j` with `δ = a - a[0]`.
    pub fn compose_into(&self, derivs: &[f64], a: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        debug_assert!(derivs.len() > self.order);
        let n = self.len();
        out[..n].iter_mut().for_each(|v| *v = 0.0);
        out[0] = derivs[self.order] / factorial(self.order);
        for j in (0..self.order).rev() {
            scratch[..n].iter_mut().for_each(|v| *v = 0.0);
            for &(i, l, k) in &self.products {
                // δ has no constant term
                if l != 0 {
                    scratch[k] += out[i] * a[l];
                }
            }
            scratch[0] += derivs[j] / factorial(j);
            out[..n].copy_from_slice(&scratch[..n]);
        }
    }
}

fn push_compositions(remaining: usize, var: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k;
        push_compositions(remaining - k, var + 1, current, out);
    }
    current[var] = 0;
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Truncated Taylor expansion of a scalar function.
#[derive(Clone, PartialEq)]
pub struct Jet {
    layout: Arc<JetLayout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("vars", &self.layout.vars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, value: f64) -> Self {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Self { layout: Arc::clone(layout), coeffs }
    }

    /// The coordinate function `value + t_var`.
    pub fn variable(layout: &Arc<JetLayout>, value: f64, var: usize) -> Self {
        let mut jet = Self::constant(layout, value);
        if layout.order >= 1 {
            jet.coeffs[layout.unit_slot(var)] = 1.0;
        }
        jet
    }

    /// Univariate jet from derivative values `f, f', …, f^{(m)}`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty());
        let layout = JetLayout::univariate(derivs.len() - 1);
        let coeffs = derivs.iter().enumerate().map(|(j, d)| d / factorial(j)).collect();
        Self { layout, coeffs }
    }

    pub fn from_coefficients(layout: &Arc<JetLayout>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), layout.len());
        Self { layout: Arc::clone(layout), coeffs }
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `D^α` at the expansion point.
    pub fn partial(&self, alpha: &[usize]) -> Option<f64> {
        self.layout.slot_of(alpha).map(|s| self.coeffs[s] * self.layout.factorial(s))
    }

    /// `D^α` for the multi-index stored in `slot`.
    pub fn partial_at_slot(&self, slot: usize) -> f64 {
        self.coeffs[slot] * self.layout.factorial(slot)
    }

    /// j-th derivative of a univariate jet.
    pub fn derivative(&self, j: usize) -> f64 {
        assert_eq!(self.layout.vars, 1, "derivative(j) needs a univariate jet");
        self.coeffs[j] * factorial(j)
    }

    /// All derivatives `f, f', …` of a univariate jet.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|j| self.derivative(j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout,
            "jets with different layouts"
        );
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Jet { layout: Arc::clone(&self.layout), coeffs }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Jet { layout: Arc::clone(&self.layout), coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { layout: Arc::clone(&self.layout), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        self.check(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        self.check(other);
        let mut coeffs = vec![0.0; self.layout.len()];
        self.layout.mul_acc(&self.coeffs, &other.coeffs, &mut coeffs);
        Jet { layout: Arc::clone(&self.layout), coeffs }
    }

    /// `g ∘ self`, where `derivs[j] = g^{(j)}(self.value())` for `j = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let n = self.layout.len();
        let mut coeffs = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.layout.compose_into(derivs, &self.coeffs, &mut coeffs, &mut scratch);
        Jet { layout: Arc::clone(&self.layout), coeffs }
    }

    /// Drop the value and shift: the jet of `f'` from the jet of `f` (univariate only).
    pub fn differentiate(&self) -> Jet {
        let d = self.derivatives();
        Jet::from_derivatives(&d[1..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts() {
        assert_eq!(JetLayout::new(1, 3).len(), 4);
        assert_eq!(JetLayout::new(2, 2).len(), 6);
        assert_eq!(JetLayout::new(3, 2).len(), 10);
        let l = JetLayout::new(2, 2);
        assert_eq!(l.multi_indices()[0], vec![0, 0]);
        assert_eq!(l.slot_of(&[1, 1]).map(|s| l.factorial(s)), Some(1.0));
        assert_eq!(l.slot_of(&[2, 0]).map(|s| l.factorial(s)), Some(2.0));
        assert_eq!(l.multi_indices()[l.unit_slot(1)], vec![0, 1]);
    }

    #[test]
    fn product_rule_univariate() {
        // (x^2)(x^3) at x = 2, third derivative of x^5 = 60 x^2 = 240
        let l = JetLayout::univariate(3);
        let x = Jet::variable(&l, 2.0, 0);
        let x2 = x.mul(&x);
        let x3 = x2.mul(&x);
        let x5 = x2.mul(&x3);
        let d = x5.derivatives();
        assert_eq!(d, vec![32.0, 80.0, 160.0, 240.0]);
    }

    #[test]
    fn composition_matches_chain_rule() {
        // exp(sin t) at t = 0.3 up to order 3
        let t0: f64 = 0.3;
        let sin = Jet::from_derivatives(&[t0.sin(), t0.cos(), -t0.sin(), -t0.cos()]);
        let e = t0.sin().exp();
        let out = sin.compose(&[e, e, e, e]);
        let (s, c) = (t0.sin(), t0.cos());
        let d1 = e * c;
        let d2 = e * (c * c - s);
        let d3 = e * (c * c * c - 3.0 * s * c - c);
        let got = out.derivatives();
        for (g, w) in got.iter().zip([e, d1, d2, d3]) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
    }

    #[test]
    fn mixed_partials_of_product() {
        // f = x*y^2 at (1, 2): f_x = 4, f_y = 4, f_xy = 4, f_yy = 2, f_xx = 0
        let l = JetLayout::new(2, 2);
        let x = Jet::variable(&l, 1.0, 0);
        let y = Jet::variable(&l, 2.0, 1);
        let f = x.mul(&y).mul(&y);
        assert_eq!(f.partial(&[0, 0]), Some(4.0));
        assert_eq!(f.partial(&[1, 0]), Some(4.0));
        assert_eq!(f.partial(&[0, 1]), Some(4.0));
        assert_eq!(f.partial(&[1, 1]), Some(4.0));
        assert_eq!(f.partial(&[0, 2]), Some(2.0));
        assert_eq!(f.partial(&[2, 0]), Some(0.0));
    }

    #[test]
    fn mul_adjoint_is_transpose() {
        let l = JetLayout::new(2, 2);
        let w: Vec<f64> = (0..l.len()).map(|i| 0.3 + i as f64).collect();
        let bar: Vec<f64> = (0..l.len()).map(|i| 1.0 - 0.2 * i as f64).collect();
        for j in 0..l.len() {
            let mut e = vec![0.0; l.len()];
            e[j] = 1.0;
            let mut out = vec![0.0; l.len()];
            l.mul_acc(&w, &e, &mut out);
            let forward: f64 = out.iter().zip(&bar).map(|(a, b)| a * b).sum();
            let mut zbar = vec![0.0; l.len()];
            l.mul_adjoint_acc(&w, &bar, &mut zbar);
            assert!((forward - zbar[j]).abs() < 1e-14);
        }
    }
}
