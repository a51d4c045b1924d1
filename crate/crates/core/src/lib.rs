//! Fixed-architecture neural networks measured in Sobolev norms.
//!
//! The crate builds explicit network sequences whose realizations converge in
//! `W^{k,p}` to functions no network of the same architecture realizes, checks
//! the inverse-proportional relation between `L^p` error and weight size, and
//! runs Sobolev-training experiments that track parameter growth.

pub mod activation;
pub mod calculus;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod network;
pub mod rates;
pub mod rng;
pub mod training;

pub use activation::{Activation, Smoothness, SmoothnessClass};
pub use calculus::{Exponent, Jet, JetField, JetLayout, QuadratureGrid, Resolution, SobolevSpec};
pub use error::{Error, Result};
pub use network::{Architecture, Layer, Network, TotalNorm};
