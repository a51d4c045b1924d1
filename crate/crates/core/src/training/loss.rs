//! Discrete Sobolev loss and its exact parameter gradient.
//!
//! The forward pass pushes multivariate jets through the network. The
//! backward pass differentiates that computation: an affine layer is linear
//! in its input coefficients, and `ρ ∘ z` perturbs to first order as the
//! truncated product `(ρ' ∘ z) · δz`, so its adjoint is the transposed
//! multiplication by the jet of `ρ' ∘ z`.

use std::sync::Arc;

use crate::activation::Activation;
use crate::calculus::{Jet, JetField, JetLayout};
use crate::error::{Error, Result};
use crate::network::Network;

/// Target jets for every batch point, in `layout`.
pub fn target_jets(target: &dyn JetField, batch: &[Vec<f64>], layout: &Arc<JetLayout>) -> Result<Vec<Jet>> {
    batch.iter().map(|x| target.jet(x, layout)).collect()
}

fn check(net: &Network, target: &dyn JetField, batch: &[Vec<f64>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if net.output_dim() != 1 {
        return Err(Error::DimensionMismatch("Sobolev loss needs a scalar-output network".into()));
    }
    if target.input_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "network takes {} inputs, target {}",
            net.input_dim(),
            target.input_dim()
        )));
    }
    if let Some(x) = batch.iter().find(|x| x.len() != net.input_dim()) {
        return Err(Error::InputShape { expected: net.input_dim(), got: x.len() });
    }
    Ok(())
}

/// Mean over the batch of `Σ_{|α| ≤ k} (D^α R(Φ)(x) - D^α f(x))²`.
pub fn sobolev_loss(net: &Network, act: &Activation, target: &dyn JetField, k: usize, batch: &[Vec<f64>]) -> Result<f64> {
    check(net, target, batch)?;
    let layout = JetLayout::new(net.input_dim(), k);
    let targets = target_jets(target, batch, &layout)?;
    let mut total = 0.0;
    for (x, t) in batch.iter().zip(&targets) {
        let jet = net.realize_multijet(act, x, &layout)?;
        total += point_loss(&layout, jet.coefficients(), t.coefficients());
    }
    Ok(total / batch.len() as f64)
}

fn point_loss(layout: &JetLayout, c: &[f64], t: &[f64]) -> f64 {
    (0..layout.len())
        .map(|s| {
            let d = layout.factorial(s) * (c[s] - t[s]);
            d * d
        })
        .sum()
}

/// Gradient of [`sobolev_loss`] with respect to [`Network::params`].
pub fn loss_gradient(net: &Network, act: &Activation, target: &dyn JetField, k: usize, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(net, act, target, k, batch)?.1)
}

/// Loss and gradient in one pass.
pub fn loss_and_gradient(
    net: &Network,
    act: &Activation,
    target: &dyn JetField,
    k: usize,
    batch: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    check(net, target, batch)?;
    let layout = JetLayout::new(net.input_dim(), k);
    let targets = target_jets(target, batch, &layout)?;
    let mut tape = Tape::new(net, layout);
    let mut grad = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (x, t) in batch.iter().zip(&targets) {
        loss += tape.accumulate(net, act, x, t.coefficients(), scale, &mut grad);
    }
    Ok((loss * scale, grad))
}

/// Buffers for one forward/backward sweep; reused across batch points.
struct Tape {
    layout: Arc<JetLayout>,
    /// Input jets of each layer, `width × len` coefficients.
    inputs: Vec<Vec<f64>>,
    /// Jets of `ρ' ∘ z` for every hidden layer.
    slopes: Vec<Vec<f64>>,
    /// Pre-activation jets of the current layer.
    pre: Vec<f64>,
    derivs: Vec<f64>,
    scratch: Vec<f64>,
    bar_in: Vec<f64>,
    bar_out: Vec<f64>,
}

impl Tape {
    fn new(net: &Network, layout: Arc<JetLayout>) -> Self {
        let n = layout.len();
        let widest = net.layers().iter().map(|l| l.rows().max(l.cols())).max().unwrap_or(1);
        Self {
            inputs: net.layers().iter().map(|l| vec![0.0; l.cols() * n]).collect(),
            slopes: net.layers().iter().map(|l| vec![0.0; l.rows() * n]).collect(),
            pre: vec![0.0; widest * n],
            derivs: vec![0.0; layout.order() + 2],
            scratch: vec![0.0; n],
            bar_in: vec![0.0; widest * n],
            bar_out: vec![0.0; widest * n],
            layout,
        }
    }

    /// Adds `scale · ∇ loss(x)` to `grad` and returns the unscaled point loss.
    fn accumulate(&mut self, net: &Network, act: &Activation, x: &[f64], target: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let layout = Arc::clone(&self.layout);
        let n = layout.len();
        let order = layout.order();
        let layers = net.layers();
        let last = layers.len() - 1;

        let input = &mut self.inputs[0];
        input.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            input[i * n] = xi;
            if order >= 1 {
                input[i * n + layout.unit_slot(i)] = 1.0;
            }
        }

        for (l, layer) in layers.iter().enumerate() {
            let rows = layer.rows();
            let pre = &mut self.pre[..rows * n];
            affine(layer, &self.inputs[l], n, pre);
            if l == last {
                break;
            }
            let next = &mut self.inputs[l + 1];
            let slopes = &mut self.slopes[l];
            for i in 0..rows {
                let z = &pre[i * n..(i + 1) * n];
                act.derivatives_into(z[0], &mut self.derivs);
                layout.compose_into(&self.derivs[..=order], z, &mut next[i * n..(i + 1) * n], &mut self.scratch);
                layout.compose_into(&self.derivs[1..], z, &mut slopes[i * n..(i + 1) * n], &mut self.scratch);
            }
        }

        let out = &self.pre[..n];
        let loss = point_loss(&layout, out, target);
        for s in 0..n {
            let f = layout.factorial(s);
            self.bar_out[s] = 2.0 * f * f * (out[s] - target[s]) * scale;
        }

        let offsets = param_offsets(net);
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let (rows, cols) = (layer.rows(), layer.cols());
            let y = &self.inputs[l];
            let off = offsets[l];
            for i in 0..rows {
                let zb = &self.bar_out[i * n..(i + 1) * n];
                for j in 0..cols {
                    let yj = &y[j * n..(j + 1) * n];
                    grad[off + i * cols + j] += zb.iter().zip(yj).map(|(a, b)| a * b).sum::<f64>();
                }
                grad[off + rows * cols + i] += zb[0];
            }
            if l == 0 {
                break;
            }
            // ȳ = Aᵀ z̄, then z̄_{l-1} = adjoint of multiplication by ρ' ∘ z
            let yb = &mut self.bar_in[..cols * n];
            yb.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..rows {
                for j in 0..cols {
                    let a = layer.weight(i, j);
                    for s in 0..n {
                        yb[j * n + s] += a * self.bar_out[i * n + s];
                    }
                }
            }
            let slopes = &self.slopes[l - 1];
            let zb = &mut self.bar_out[..cols * n];
            zb.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..cols {
                layout.mul_adjoint_acc(&slopes[j * n..(j + 1) * n], &yb[j * n..(j + 1) * n], &mut zb[j * n..(j + 1) * n]);
            }
        }
        loss
    }
}

fn affine(layer: &crate::network::Layer, input: &[f64], n: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..layer.rows() {
        let row = &mut out[i * n..(i + 1) * n];
        row[0] = layer.bias()[i];
        for (j, &a) in layer.row(i).iter().enumerate() {
            for (r, y) in row.iter_mut().zip(&input[j * n..(j + 1) * n]) {
                *r += a * y;
            }
        }
    }
}

fn param_offsets(net: &Network) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(net.layers().len());
    let mut acc = 0;
    for layer in net.layers() {
        offsets.push(acc);
        acc += layer.rows() * (layer.cols() + 1);
    }
    offsets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::FnField;
    use crate::constructions::TargetFunction;
    use crate::network::{Architecture, Layer};
    use crate::rng;
    use rand::Rng;

    fn grid_batch(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![lo + (hi - lo) * (i as f64 + 0.37) / n as f64]).collect()
    }

    fn affine_target(a: f64, b: f64) -> impl JetField {
        FnField::new(1, move |x: &[f64], l: &Arc<JetLayout>| Ok(Jet::variable(l, x[0], 0).scale(a).add_scalar(b)))
    }

    #[test]
    fn exact_fit_has_zero_loss_and_gradient() {
        let net = Network::new(1, vec![Layer::from_rows(&[&[2.0]], &[1.0]).unwrap(), Layer::from_rows(&[&[3.0]], &[-1.0]).unwrap()])
            .unwrap();
        let target = affine_target(6.0, 2.0);
        let batch = grid_batch(-2.0, 2.0, 17);
        for k in 0..3 {
            let (loss, grad) = loss_and_gradient(&net, &Activation::Linear, &target, k, &batch).unwrap();
            assert!(loss < 1e-24);
            assert!(grad.iter().all(|g| g.abs() < 1e-10));
        }
    }

    #[test]
    fn order_zero_is_mean_squared_error() {
        let act = Activation::Tanh;
        let net = Network::random_init(&Architecture::parse("1,4,1").unwrap(), 3, 1.0);
        let target = affine_target(0.5, -0.2);
        let batch = grid_batch(-3.0, 3.0, 11);
        let mse: f64 = batch
            .iter()
            .map(|x| {
                let r = net.realize_scalar(&act, x).unwrap() - (0.5 * x[0] - 0.2);
                r * r
            })
            .sum::<f64>()
            / 11.0;
        let loss = sobolev_loss(&net, &act, &target, 0, &batch).unwrap();
        assert!((loss - mse).abs() < 1e-13);
        assert!(sobolev_loss(&net, &act, &target, 1, &batch).unwrap() >= loss);
    }

    #[test]
    fn gradient_length_is_parameter_count() {
        let net = Network::random_init(&Architecture::parse("1,10,1").unwrap(), 1, 1.0);
        let g = loss_gradient(&net, &Activation::Elu, &affine_target(1.0, 0.0), 1, &grid_batch(-5.0, 5.0, 8)).unwrap();
        assert_eq!(g.len(), 31);
    }

    #[test]
    fn loss_matches_returned_loss() {
        let act = Activation::Sigmoid;
        let net = Network::random_init(&Architecture::parse("2,3,2,1").unwrap(), 9, 1.0);
        let target = TargetFunction::Projection { dim: 2, coord: 0 };
        let batch: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64 * 0.3 - 1.0, 0.7 - i as f64 * 0.2]).collect();
        let a = sobolev_loss(&net, &act, &target, 2, &batch).unwrap();
        let (b, _) = loss_and_gradient(&net, &act, &target, 2, &batch).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn sigmoid_gradient_matches_finite_differences() {
        let act = Activation::Sigmoid;
        let mut rng = rng::stream(11, rng::streams::TEST);
        let target = TargetFunction::activation_derivative(Activation::Softsign);
        for case in 0..5 {
            let net = Network::random_init(&Architecture::parse("1,3,1").unwrap(), case, 1.0);
            let batch: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen_range(-3.0..3.0)]).collect();
            let grad = loss_gradient(&net, &act, &target, 1, &batch).unwrap();
            let params = net.params();
            let h = 1e-6;
            for (i, g) in grad.iter().enumerate() {
                let mut probe = net.clone();
                let mut p = params.clone();
                p[i] += h;
                probe.set_params(&p);
                let up = sobolev_loss(&probe, &act, &target, 1, &batch).unwrap();
                p[i] -= 2.0 * h;
                probe.set_params(&p);
                let down = sobolev_loss(&probe, &act, &target, 1, &batch).unwrap();
                let fd = (up - down) / (2.0 * h);
                assert!((g - fd).abs() <= 1e-5 * fd.abs().max(1e-2), "case {case} param {i}: {g} vs {fd}");
            }
        }
    }
}
