//! Seeded multi-trial Sobolev training.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{loss_and_gradient, sobolev_loss};
use super::targets::{gen_piecewise_linear, gen_piecewise_quadratic};
use crate::activation::Activation;
use crate::constructions::TargetFunction;
use crate::error::{Error, Result};
use crate::network::{Architecture, Network};
use crate::rng;

/// What each trial is trained against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSpec {
    /// Fresh random piecewise-linear function per trial.
    PiecewiseLinear { knots: usize, range: (f64, f64) },
    /// Fresh random `C¹` piecewise-quadratic function per trial; `range` bounds its derivative.
    PiecewiseQuadratic { knots: usize, range: (f64, f64) },
    /// `x ↦ x_coord` (0-based).
    Projection { coord: usize },
    /// `ρ'` of the training activation.
    ActivationDerivative,
}

impl TargetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::PiecewiseLinear { .. } => "pwl",
            TargetSpec::PiecewiseQuadratic { .. } => "pwq",
            TargetSpec::Projection { .. } => "proj",
            TargetSpec::ActivationDerivative => "rho-prime",
        }
    }

    fn build(&self, act: &Activation, dim: usize, b: f64, seed: u64) -> Result<TargetFunction> {
        Ok(match *self {
            TargetSpec::PiecewiseLinear { knots, range } => TargetFunction::Piecewise(gen_piecewise_linear(seed, knots, b, range)?),
            TargetSpec::PiecewiseQuadratic { knots, range } => {
                TargetFunction::Piecewise(gen_piecewise_quadratic(seed, knots, b, range)?)
            }
            TargetSpec::Projection { coord } => TargetFunction::Projection { dim, coord },
            TargetSpec::ActivationDerivative => TargetFunction::activation_derivative(*act),
        })
    }
}

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    EluPwl,
    IsrluPwq,
    SigmoidProj,
    RateSoftsign,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::EluPwl, Preset::IsrluPwq, Preset::SigmoidProj, Preset::RateSoftsign];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::EluPwl => "elu-pwl",
            Preset::IsrluPwq => "isrlu-pwq",
            Preset::SigmoidProj => "sigmoid-proj",
            Preset::RateSoftsign => "rate-softsign",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub arch: Architecture,
    pub act: Activation,
    /// Sobolev order `k` of the loss.
    pub order: usize,
    /// Half-width `B` of the training box `[-B, B]^d`.
    pub b: f64,
    pub target: TargetSpec,
    pub epochs: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    pub init_scale: f64,
    pub clamp: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Epoch spacing of scatter checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    /// Size of the fixed batch used for checkpoint losses.
    pub test_batch: usize,
}

impl TrainConfig {
    pub fn preset(p: Preset) -> TrainConfig {
        let base = TrainConfig {
            arch: Architecture::parse("1,10,1").expect("valid"),
            act: Activation::Elu,
            order: 1,
            b: 5.0,
            target: TargetSpec::PiecewiseLinear { knots: 6, range: (-3.0, 3.0) },
            epochs: 2000,
            batch: 256,
            adam: AdamConfig::default(),
            init_scale: 1.0,
            clamp: None,
            trials: 20,
            seed: 42,
            checkpoint_every: 0,
            test_batch: 1024,
        };
        match p {
            Preset::EluPwl => base,
            Preset::IsrluPwq => TrainConfig {
                act: Activation::Isrlu { a: 1.0 },
                order: 2,
                target: TargetSpec::PiecewiseQuadratic { knots: 6, range: (-3.0, 3.0) },
                ..base
            },
            Preset::SigmoidProj => TrainConfig {
                arch: Architecture::parse("2,10,1").expect("valid"),
                act: Activation::Sigmoid,
                order: 2,
                target: TargetSpec::Projection { coord: 0 },
                trials: 10,
                ..base
            },
            Preset::RateSoftsign => TrainConfig {
                arch: Architecture::parse("1,2,1").expect("valid"),
                act: Activation::Softsign,
                order: 0,
                target: TargetSpec::ActivationDerivative,
                trials: 10,
                checkpoint_every: 100,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arch.output_dim() != 1 {
            return Err(Error::InvalidArchitecture("training needs a scalar output".into()));
        }
        if self.trials == 0 || self.epochs == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument("trials, epochs and batch must be positive".into()));
        }
        if !(self.b > 0.0) || !(self.init_scale >= 0.0) || !(self.adam.lr > 0.0) {
            return Err(Error::InvalidArgument("B and lr must be positive, init scale nonnegative".into()));
        }
        if let Some(c) = self.clamp {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument("clamp bound must be positive".into()));
            }
        }
        let d = self.arch.input_dim();
        match self.target {
            TargetSpec::PiecewiseLinear { .. } | TargetSpec::PiecewiseQuadratic { .. } | TargetSpec::ActivationDerivative
                if d != 1 =>
            {
                return Err(Error::InvalidArchitecture(format!("{} targets are one-dimensional", self.target.name())));
            }
            TargetSpec::Projection { coord } if coord >= d => {
                return Err(Error::InvalidArgument(format!("coordinate {coord} out of range for d = {d}")));
            }
            _ => {}
        }
        if self.test_batch == 0 && self.checkpoint_every > 0 {
            return Err(Error::InvalidArgument("checkpoints need a nonempty test batch".into()));
        }
        Ok(())
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        rng::mix(self.seed, i as u64)
    }
}

/// One recorded epoch. `loss` and `total_norm` are measured before that epoch's update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub epoch: usize,
    pub loss: f64,
    pub best_loss: f64,
    pub total_norm: f64,
    /// Seconds since the trial started; not part of any CSV.
    pub wall_time: f64,
}

/// Loss on the fixed test batch and norm after `epoch` updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub trial: usize,
    pub epoch: usize,
    pub loss: f64,
    pub total_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub records: Vec<ExperimentRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub net: Network,
    /// Set when a non-finite loss or gradient stopped the trial.
    pub diverged: bool,
}

impl TrialResult {
    pub fn final_record(&self) -> Option<&ExperimentRecord> {
        self.records.last()
    }
}

fn sample_box<R: Rng>(rng: &mut R, count: usize, d: usize, b: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.gen_range(-b..b)).collect()).collect()
}

/// Runs trial `trial` with seed `seed`; `init` replaces the random initial network.
pub fn run_trial(config: &TrainConfig, trial: usize, seed: u64, init: Option<&Network>) -> Result<TrialResult> {
    config.validate()?;
    let start = Instant::now();
    let d = config.arch.input_dim();
    let mut net = match init {
        Some(n) if n.architecture() == &config.arch => n.clone(),
        Some(n) => {
            return Err(Error::InvalidArchitecture(format!(
                "initial network has architecture {}, config expects {}",
                n.architecture(),
                config.arch
            )))
        }
        None => Network::random_init(&config.arch, seed, config.init_scale),
    };
    if let Some(c) = config.clamp {
        net.clamp_in_place(c);
    }
    let target = config.target.build(&config.act, d, config.b, seed)?;
    let mut batch_rng = rng::stream(seed, rng::streams::BATCH);
    let test_batch = if config.checkpoint_every > 0 {
        sample_box(&mut rng::stream(seed, rng::streams::TEST), config.test_batch, d, config.b)
    } else {
        Vec::new()
    };
    let mut state = AdamState::new(net.param_count(), config.adam);
    let mut params = net.params();
    let mut records = Vec::with_capacity(config.epochs);
    let mut checkpoints = Vec::new();
    let mut best = f64::INFINITY;
    let mut diverged = false;
    for epoch in 1..=config.epochs {
        let batch = sample_box(&mut batch_rng, config.batch, d, config.b);
        let total_norm = net.total_norm().value();
        let (loss, grad) = match loss_and_gradient(&net, &config.act, &target, config.order, &batch) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            diverged = true;
            break;
        }
        best = best.min(loss);
        records.push(ExperimentRecord {
            trial,
            epoch,
            loss,
            best_loss: best,
            total_norm,
            wall_time: start.elapsed().as_secs_f64(),
        });
        adam_step(&mut params, &grad, &mut state);
        if params.iter().any(|p| !p.is_finite()) {
            diverged = true;
            break;
        }
        net.set_params(&params);
        if let Some(c) = config.clamp {
            net.clamp_in_place(c);
            params = net.params();
        }
        if config.checkpoint_every > 0 && (epoch % config.checkpoint_every == 0 || epoch == config.epochs) {
            let loss = sobolev_loss(&net, &config.act, &target, config.order, &test_batch)?;
            checkpoints.push(Checkpoint { trial, epoch, loss, total_norm: net.total_norm().value() });
        }
    }
    Ok(TrialResult { trial, seed, records, checkpoints, net, diverged })
}

/// Per-epoch statistics across non-diverged trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub epoch: usize,
    pub mean_best_loss: f64,
    pub mean_norm: f64,
    pub norm_lo95: f64,
    pub norm_hi95: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trials: Vec<TrialResult>,
    pub aggregate: Vec<AggregateRow>,
}

/// Mean and 95% normal-approximation half-width (`1.96 s / √n`).
pub fn mean_band(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// Aggregates trials in trial order; diverged trials are excluded.
pub fn aggregate(trials: &[TrialResult]) -> Result<Vec<AggregateRow>> {
    let ok: Vec<&TrialResult> = trials.iter().filter(|t| !t.diverged).collect();
    if ok.is_empty() {
        return Err(Error::ExperimentFailure);
    }
    let epochs = ok.iter().map(|t| t.records.len()).min().unwrap_or(0);
    Ok((0..epochs)
        .map(|e| {
            let best: Vec<f64> = ok.iter().map(|t| t.records[e].best_loss).collect();
            let norms: Vec<f64> = ok.iter().map(|t| t.records[e].total_norm).collect();
            let (mean_norm, half) = mean_band(&norms);
            AggregateRow {
                epoch: ok[0].records[e].epoch,
                mean_best_loss: mean_band(&best).0,
                mean_norm,
                norm_lo95: mean_norm - half,
                norm_hi95: mean_norm + half,
            }
        })
        .collect())
}

/// Runs every trial (in parallel) and aggregates them in trial order.
pub fn run_experiment(config: &TrainConfig, init: Option<&Network>) -> Result<ExperimentResult> {
    config.validate()?;
    let trials: Result<Vec<TrialResult>> =
        (0..config.trials).into_par_iter().map(|i| run_trial(config, i, config.trial_seed(i), init)).collect();
    let trials = trials?;
    let aggregate = aggregate(&trials)?;
    Ok(ExperimentResult { trials, aggregate })
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
