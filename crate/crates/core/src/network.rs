//! Networks as sequences of matrix-vector pairs.

use std::sync::Arc;

use rand_distr::{Distribution, Normal};

use crate::activation::Activation;
use crate::calculus::jet::{Jet, JetLayout};
use crate::error::{Error, Result};
use crate::rng;

/// `(d, N_1, …, N_L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    input_dim: usize,
    widths: Vec<usize>,
}

impl Architecture {
    pub fn new(input_dim: usize, widths: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArchitecture("input dimension must be positive".into()));
        }
        if widths.is_empty() {
            return Err(Error::InvalidArchitecture("at least one layer is required".into()));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidArchitecture("layer widths must be positive".into()));
        }
        Ok(Self { input_dim, widths })
    }

    /// Parses `d,N_1,…,N_L`.
    pub fn parse(s: &str) -> Result<Self> {
        let dims: std::result::Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse()).collect();
        let dims = dims.map_err(|_| Error::InvalidArchitecture(format!("cannot parse {s:?}")))?;
        match dims.split_first() {
            Some((&d, rest)) => Self::new(d, rest.to_vec()),
            None => Err(Error::InvalidArchitecture("empty architecture".into())),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("nonempty")
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len()
    }

    /// `N_{ℓ-1}` for layer `ℓ` (0-based).
    pub fn fan_in(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.widths[layer - 1]
        }
    }

    pub fn param_count(&self) -> usize {
        (0..self.num_layers()).map(|l| self.widths[l] * (self.fan_in(l) + 1)).sum()
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for w in &self.widths {
            write!(f, ",{w}")?;
        }
        Ok(())
    }
}

/// One affine map `y ↦ A y + b` with `A` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArchitecture("empty layer".into()));
        }
        if weights.len() != rows * cols || bias.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "layer {rows}x{cols} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("network entries must be finite".into()));
        }
        Ok(Self { rows, cols, weights, bias })
    }

    /// Layer from nested rows.
    pub fn from_rows(rows: &[&[f64]], bias: &[f64]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), bias.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], bias: vec![0.0; rows] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(self.bias[i], |acc, (a, v)| acc + a * v))
            .collect()
    }

    fn apply_jets(&self, x: &[Jet]) -> Vec<Jet> {
        (0..self.rows)
            .map(|i| {
                let mut acc = Jet::constant(x[0].layout(), self.bias[i]);
                for (a, v) in self.row(i).iter().zip(x) {
                    acc.axpy(*a, v);
                }
                acc
            })
            .collect()
    }

    fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn max_abs_bias(&self) -> f64 {
        self.bias.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `‖Φ‖_total = max_ℓ ‖A_ℓ‖_max + max_ℓ ‖b_ℓ‖_max`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TotalNorm(pub f64);

impl TotalNorm {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let arch = Architecture::new(input_dim, layers.iter().map(Layer::rows).collect())?;
        for (l, layer) in layers.iter().enumerate() {
            if layer.cols != arch.fan_in(l) {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} has {} columns, expected {}",
                    l + 1,
                    layer.cols,
                    arch.fan_in(l)
                )));
            }
        }
        Ok(Self { arch, layers })
    }

    /// Network with every entry zero.
    pub fn zeros(arch: &Architecture) -> Self {
        let layers = (0..arch.num_layers()).map(|l| Layer::zeros(arch.widths[l], arch.fan_in(l))).collect();
        Self { arch: arch.clone(), layers }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output_dim()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::InputShape { expected: self.input_dim(), got: len });
        }
        Ok(())
    }

    /// `W_L ∘ ρ ∘ W_{L-1} ∘ ⋯ ∘ ρ ∘ W_1 (x)`; no activation after the last layer.
    pub fn realize(&self, act: &Activation, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        let last = self.layers.len() - 1;
        let mut y = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            y = layer.apply(&y);
            if l != last {
                y.iter_mut().for_each(|v| *v = act.eval(*v));
            }
        }
        Ok(y)
    }

    /// Scalar output of a network with `N_L = 1`.
    pub fn realize_scalar(&self, act: &Activation, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch(format!("expected scalar output, got {}", self.output_dim())));
        }
        Ok(self.realize(act, x)?[0])
    }

    /// Propagates input jets through the network.
    pub fn realize_jets(&self, act: &Activation, inputs: &[Jet]) -> Result<Vec<Jet>> {
        self.check_input(inputs.len())?;
        let order = inputs[0].order();
        let last = self.layers.len() - 1;
        let mut derivs = vec![0.0; order + 1];
        let mut y = inputs.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            y = layer.apply_jets(&y);
            if l != last {
                for v in y.iter_mut() {
                    act.derivatives_into(v.value(), &mut derivs);
                    *v = v.compose(&derivs);
                }
            }
        }
        Ok(y)
    }

    /// Jet of `t ↦ R(Φ)(x + t·direction)` at `t = 0` up to `order`.
    pub fn realize_jet(&self, act: &Activation, x: &[f64], direction: &[f64], order: usize) -> Result<Jet> {
        self.check_input(x.len())?;
        self.check_input(direction.len())?;
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch("jets need a scalar-output network".into()));
        }
        let layout = JetLayout::univariate(order);
        let inputs: Vec<Jet> = x
            .iter()
            .zip(direction)
            .map(|(&xi, &di)| {
                let mut j = Jet::constant(&layout, xi);
                if order >= 1 {
                    let mut c = j.coefficients().to_vec();
                    c[1] = di;
                    j = Jet::from_coefficients(&layout, c);
                }
                j
            })
            .collect();
        Ok(self.realize_jets(act, &inputs)?.remove(0))
    }

    /// Jet in all input variables (all mixed partials up to the layout order).
    pub fn realize_multijet(&self, act: &Activation, x: &[f64], layout: &Arc<JetLayout>) -> Result<Jet> {
        self.check_input(x.len())?;
        if layout.vars() != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "layout has {} variables, input has {}",
                layout.vars(),
                x.len()
            )));
        }
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch("jets need a scalar-output network".into()));
        }
        let inputs: Vec<Jet> = x.iter().enumerate().map(|(i, &xi)| Jet::variable(layout, xi, i)).collect();
        Ok(self.realize_jets(act, &inputs)?.remove(0))
    }

    /// `Φ₁ ∙ Φ₂`: realizes `R(Φ₁) ∘ R(Φ₂)` with `L₁ + L₂ - 1` layers.
    pub fn concat(phi1: &Network, phi2: &Network) -> Result<Network> {
        if phi1.input_dim() != phi2.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "outer network takes {} inputs, inner produces {}",
                phi1.input_dim(),
                phi2.output_dim()
            )));
        }
        let inner_last = phi2.layers.last().expect("nonempty");
        let outer_first = &phi1.layers[0];
        let rows = outer_first.rows;
        let cols = inner_last.cols;
        let mut weights = vec![0.0; rows * cols];
        let mut bias = outer_first.bias.clone();
        for i in 0..rows {
            for k in 0..outer_first.cols {
                let a = outer_first.weight(i, k);
                for j in 0..cols {
                    weights[i * cols + j] += a * inner_last.weight(k, j);
                }
                bias[i] += a * inner_last.bias[k];
            }
        }
        let mut layers: Vec<Layer> = phi2.layers[..phi2.layers.len() - 1].to_vec();
        layers.push(Layer { rows, cols, weights, bias });
        layers.extend_from_slice(&phi1.layers[1..]);
        Network::new(phi2.input_dim(), layers)
    }

    pub fn total_norm(&self) -> TotalNorm {
        let a = self.layers.iter().map(Layer::max_abs_weight).fold(0.0, f64::max);
        let b = self.layers.iter().map(Layer::max_abs_bias).fold(0.0, f64::max);
        TotalNorm(a + b)
    }

    /// Entrywise clamp to `[-c, c]`.
    pub fn clamp_weights(&self, c: f64) -> Network {
        assert!(c > 0.0, "clamp bound must be positive");
        let mut out = self.clone();
        out.clamp_in_place(c);
        out
    }

    pub fn clamp_in_place(&mut self, c: f64) {
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = v.clamp(-c, c);
            }
        }
    }

    /// i.i.d. `N(0, scale²)` entries from ChaCha8 stream `(seed, INIT)`.
    pub fn random_init(arch: &Architecture, seed: u64, scale: f64) -> Network {
        let mut rng = rng::stream(seed, rng::streams::INIT);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut params: Vec<f64> = (0..arch.param_count()).map(|_| scale * normal.sample(&mut rng)).collect();
        // -0.0 for scale = 0 would still be a zero net; normalise for bitwise equality
        params.iter_mut().filter(|v| **v == 0.0).for_each(|v| *v = 0.0);
        let mut net = Network::zeros(arch);
        net.set_params(&params);
        net
    }

    pub fn param_count(&self) -> usize {
        self.arch.param_count()
    }

    /// Flattened parameters: per layer, `A` row-major then `b`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
    }

    /// Writes the plain-text network format.
    ///
    /// ```text
    /// network <d> <L>
    /// layer <rows> <cols>
    /// <row 1 entries>
    /// …
    /// bias <entries>
    /// ```
    ///
    /// Numbers use Rust's shortest round-trip formatting, so parsing the output
    /// reproduces every entry bit-for-bit. Lines starting with `#` are comments.
    pub fn to_text(&self) -> String {
        let mut s = format!("network {} {}\n", self.input_dim(), self.layers.len());
        for layer in &self.layers {
            s.push_str(&format!("layer {} {}\n", layer.rows, layer.cols));
            for i in 0..layer.rows {
                s.push_str(&join(layer.row(i)));
                s.push('\n');
            }
            s.push_str("bias ");
            s.push_str(&join(&layer.bias));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Network> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 || head[0] != "network" {
            return Err(parse_err(ln, "expected `network <d> <L>`"));
        }
        let d: usize = head[1].parse().map_err(|_| parse_err(ln, "bad input dimension"))?;
        let count: usize = head[2].parse().map_err(|_| parse_err(ln, "bad layer count"))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing layer"))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "layer" {
                return Err(parse_err(ln, "expected `layer <rows> <cols>`"));
            }
            let rows: usize = parts[1].parse().map_err(|_| parse_err(ln, "bad row count"))?;
            let cols: usize = parts[2].parse().map_err(|_| parse_err(ln, "bad column count"))?;
            let mut weights = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing matrix row"))?;
                let row = parse_numbers(l).map_err(|m| parse_err(ln, &m))?;
                if row.len() != cols {
                    return Err(parse_err(ln, "row length does not match column count"));
                }
                weights.extend(row);
            }
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing bias"))?;
            let rest = l.strip_prefix("bias").ok_or_else(|| parse_err(ln, "expected `bias ...`"))?;
            let bias = parse_numbers(rest).map_err(|m| parse_err(ln, &m))?;
            layers.push(Layer::new(rows, cols, weights, bias).map_err(|e| parse_err(ln, &e.to_string()))?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content"));
        }
        Network::new(d, layers)
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn parse_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}"))).collect()
}
