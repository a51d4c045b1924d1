//! Bias-corrected Adam.

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.005, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0, config }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState) {
    assert_eq!(params.len(), grad.len(), "parameter and gradient lengths differ");
    assert_eq!(params.len(), state.m.len(), "optimizer state has the wrong length");
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
