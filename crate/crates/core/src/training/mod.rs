//! Sobolev training: random non-network targets, the discrete `W^{k,2}` loss
//! with exact gradients, Adam, and a seeded multi-trial runner.

pub mod adam;
pub mod loss;
pub mod runner;
pub mod targets;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{loss_and_gradient, loss_gradient, sobolev_loss};
pub use runner::{
    aggregate, median, run_experiment, run_trial, AggregateRow, Checkpoint, ExperimentRecord, ExperimentResult, Preset,
    TargetSpec, TrainConfig, TrialResult,
};
pub use targets::{gen_piecewise_linear, gen_piecewise_quadratic, PiecewiseKind, PiecewiseTarget};
