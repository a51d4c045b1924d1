//! Command-line interface.
//!
//! Every CSV starts with `#` lines holding the tool version, the fully
//! resolved command (`# command: …`) and its hash. Passing that command back
//! to the binary, plus an output location, reproduces the file byte-for-byte.
//! Output paths and `--threads` are not part of the echoed command.
//!
//! Exit codes: 0 success, 1 usage, 2 bound or criterion failure, 3 numerical failure.

pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::activation::Activation;
use crate::calculus::{sobolev_error, BoxDomain, Exponent, QuadratureGrid, Realization, Resolution, SobolevSpec};
use crate::constructions::{projection_net, thm1_sequence, thm2_sequence, ProjectionRequest};
use crate::error::Error;
use crate::network::{Architecture, Network};
use crate::rates::{bound_constant, verify_rate};
use crate::training::{run_experiment, AdamConfig, Preset, TargetSpec, TrainConfig};
use output::{Csv, Echo, Table};
use plot::PlotSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CRITERION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sobolev-nets", version, about = "Network constructions, rate bounds and Sobolev training")]
pub struct Cli {
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the activation catalog with smoothness metadata.
    Activations(ActivationsArgs),
    /// Check `‖h_n - ρ'‖_{L^p} ≤ K/n` for the difference-quotient networks.
    Rates(RatesArgs),
    /// Sobolev error of the non-closedness sequences along n.
    Converge(ConvergeArgs),
    /// Build a width-one approximator of a coordinate projection.
    Project(ProjectArgs),
    /// Run a Sobolev-training experiment.
    Train(TrainArgs),
    /// Export (loss, total norm) checkpoints of a training experiment.
    Scatter(TrainArgs),
    /// Render a CSV as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ResolutionArgs {
    /// Quadrature panels per axis.
    #[arg(long)]
    pub panels: Option<usize>,
    /// Gauss nodes per panel.
    #[arg(long)]
    pub nodes: Option<usize>,
}

impl ResolutionArgs {
    fn resolve(&self, dim: usize) -> Resolution {
        let base = Resolution::default_for(dim);
        Resolution::new(self.panels.unwrap_or(base.panels), self.nodes.unwrap_or(base.nodes))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ActivationsArgs {
    /// Shape parameter for ISRU and ISRLU.
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub activation: Activation,
    #[arg(long, default_value = "inf")]
    pub p: Exponent,
    #[arg(long = "B", default_value_t = 5.0)]
    pub b: f64,
    #[arg(long, value_parser = parse_ns, default_value = "1,2,5,10,50,100,500,1000")]
    pub ns: NList,
    #[command(flatten)]
    pub resolution: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub activation: Activation,
    /// Sobolev order k.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    #[arg(long, default_value = "2")]
    pub p: Exponent,
    #[arg(long = "B", default_value_t = 5.0)]
    pub b: f64,
    /// Number of layers (default 2, or 3 with --analytic).
    #[arg(long = "L")]
    pub layers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Half-width of the interval covered by the inner network.
    #[arg(long = "D", default_value_t = 1.0)]
    pub cover: f64,
    #[arg(long, value_parser = parse_ns, default_value = "1,2,4,8,16,32,64,128,256")]
    pub ns: NList,
    /// Use the analytic-activation sequence converging to the unbounded target.
    #[arg(long)]
    pub analytic: bool,
    #[command(flatten)]
    pub resolution: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the network for the last n.
    #[arg(long)]
    pub save_net: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    #[arg(long, default_value = "sigmoid")]
    pub activation: Activation,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long = "L", default_value_t = 2)]
    pub layers: usize,
    /// Projected coordinate, 1-based.
    #[arg(long, default_value_t = 1)]
    pub coord: usize,
    #[arg(long = "B", default_value_t = 5.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value = "2")]
    pub p: Exponent,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[command(flatten)]
    pub resolution: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub save_net: Option<PathBuf>,
}

/// Training flags; anything not given comes from the preset.
#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<Architecture>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// pwl, pwq, proj or rho-prime.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub knots: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub range_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub range_hi: Option<f64>,
    /// Projected coordinate for the proj target, 1-based.
    #[arg(long)]
    pub coord: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub adam_eps: Option<f64>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Entrywise weight bound, or `none`.
    #[arg(long)]
    pub clamp: Option<Clamp>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub test_batch: Option<usize>,
    /// Initial network for every trial.
    #[arg(long)]
    pub load_net: Option<PathBuf>,
    /// Directory for final networks, one file per trial.
    #[arg(long)]
    pub save_net: Option<PathBuf>,
    /// Output directory (train).
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
    /// Output file (scatter); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// x column (default: first column).
    #[arg(long)]
    pub x: Option<String>,
    /// Comma-separated y columns.
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub logx: bool,
    #[arg(long)]
    pub logy: bool,
    #[arg(long)]
    pub scatter: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NList(pub Vec<u64>);

impl std::fmt::Display for NList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_ns(s: &str) -> Result<NList, String> {
    let ns: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse::<u64>()).collect();
    match ns {
        Ok(v) if !v.is_empty() && v.iter().all(|&n| n > 0) => Ok(NList(v)),
        _ => Err(format!("expected a comma-separated list of positive integers, got {s:?}")),
    }
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    Architecture::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamp(pub Option<f64>);

impl FromStr for Clamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(Clamp(None));
        }
        match s.parse::<f64>() {
            Ok(c) if c > 0.0 && c.is_finite() => Ok(Clamp(Some(c))),
            _ => Err(format!("clamp must be a positive number or `none`, got {s:?}")),
        }
    }
}

impl std::fmt::Display for Clamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(c) => write!(f, "{c}"),
            None => f.write_str("none"),
        }
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } | Error::ExperimentFailure => EXIT_NUMERICAL,
            Error::ConstructionFailure(_) => EXIT_CRITERION,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.threads {
        // the global pool can be built once per process; later calls keep the first size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match &cli.command {
        Command::Activations(a) => cmd_activations(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Project(a) => cmd_project(a),
        Command::Train(a) => cmd_train(a),
        Command::Scatter(a) => cmd_scatter(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn cmd_activations(a: &ActivationsArgs) -> CmdResult {
    if !(a.shape > 0.0 && a.shape.is_finite()) {
        return Err(Failure::usage("shape must be positive"));
    }
    let echo = Echo::new("activations").flag("shape", a.shape);
    let mut csv = Csv::new(
        &echo,
        &[
            "name",
            "smoothness",
            "analytic",
            "bounded",
            "sup_bound",
            "all_derivatives_bounded",
            "second_derivative_sup",
            "z0",
            "rho_prime_z0",
        ],
    );
    for act in Activation::catalog() {
        let act = act.with_shape(a.shape);
        let s = act.smoothness();
        let z0 = act.find_z0()?;
        let class = if s.is_analytic() { "analytic".to_string() } else { format!("C{}", s.order()) };
        csv.row(&[
            act.to_string(),
            class,
            s.is_analytic().to_string(),
            s.bounded.to_string(),
            fmt_opt(s.sup_bound),
            s.all_derivatives_bounded.to_string(),
            fmt_opt(s.second_derivative_sup),
            z0.to_string(),
            act.derivative(z0).to_string(),
        ]);
    }
    csv.emit(a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_rates(a: &RatesArgs) -> CmdResult {
    let res = a.resolution.resolve(1);
    let rb = bound_constant(&a.activation, a.p, a.b)?;
    let echo = Echo::new("rates")
        .flag("activation", a.activation)
        .flag("p", a.p)
        .flag("B", a.b)
        .flag("ns", &a.ns)
        .flag("panels", res.panels)
        .flag("nodes", res.nodes);
    let records = verify_rate(&a.activation, a.p, a.b, &a.ns.0, res)?;
    let mut csv = Csv::new(&echo, &["activation", "p", "n", "total_norm", "measured_error", "bound", "pass"]);
    csv.comment(&format!("form: {}, K: {}, C_p: {}", rb.form, rb.per_n, rb.c_p));
    for r in &records {
        csv.row(&[
            a.activation.to_string(),
            a.p.to_string(),
            r.n.to_string(),
            r.total_norm.to_string(),
            r.measured_error.to_string(),
            r.bound.to_string(),
            r.pass.to_string(),
        ]);
    }
    csv.emit(a.out.as_deref())?;
    Ok(if records.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_CRITERION })
}

fn save_net(path: Option<&Path>, net: &Network) -> Result<(), Failure> {
    if let Some(p) = path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(p, net.to_text())?;
    }
    Ok(())
}

fn cmd_converge(a: &ConvergeArgs) -> CmdResult {
    let act = a.activation;
    let s = act.smoothness();
    let layers = a.layers.unwrap_or(if a.analytic { 3 } else { 2 });
    if a.analytic {
        if !(s.is_analytic() && s.bounded) {
            return Err(Failure::usage(format!("--analytic needs a bounded analytic activation, {act} is not")));
        }
        if layers < 3 {
            return Err(Failure::usage("--analytic needs L >= 3"));
        }
    } else {
        if s.is_analytic() && act != Activation::Linear {
            return Err(Failure::usage(format!("{act} is analytic; use --analytic")));
        }
        if s.order() == 0 {
            return Err(Failure::usage(format!("{act} is not C^1")));
        }
        if a.order > s.max_sobolev_order() {
            return Err(Failure::usage(format!(
                "order {} exceeds {} for {act}",
                a.order,
                s.max_sobolev_order()
            )));
        }
        if layers < 2 {
            return Err(Failure::usage("L must be at least 2"));
        }
    }
    if a.d == 0 || a.d > 3 {
        return Err(Failure::usage("d must lie in 1..=3"));
    }
    let res = a.resolution.resolve(a.d);
    let domain = BoxDomain::new(a.b, a.d);
    let grid = QuadratureGrid::new(domain, res)?;
    let spec = SobolevSpec { order: a.order, p: a.p, domain, resolution: res };
    let echo = Echo::new("converge")
        .flag("activation", act)
        .flag("order", a.order)
        .flag("p", a.p)
        .flag("B", a.b)
        .flag("L", layers)
        .flag("d", a.d)
        .flag("D", a.cover)
        .flag("ns", &a.ns)
        .switch("analytic", a.analytic)
        .flag("panels", res.panels)
        .flag("nodes", res.nodes);
    let mut csv = Csv::new(&echo, &["n", "total_norm", "sobolev_error"]);
    let mut last = None;
    for &n in &a.ns.0 {
        let (net, err) = if a.analytic {
            let m = thm2_sequence(&act, a.d, layers, a.b, a.order, a.p, n, res)?;
            let err = sobolev_error(&Realization::new(&m.net, act), &m.target, &spec, &grid)?;
            (m.net, err)
        } else {
            let (net, target) = thm1_sequence(&act, a.d, layers, a.b, n, a.cover)?;
            let err = sobolev_error(&Realization::new(&net, act), &target, &spec, &grid)?;
            (net, err)
        };
        csv.row(&[n.to_string(), net.total_norm().value().to_string(), err.to_string()]);
        last = Some(net);
    }
    csv.emit(a.out.as_deref())?;
    if let Some(net) = last {
        save_net(a.save_net.as_deref(), &net)?;
    }
    Ok(EXIT_OK)
}

fn cmd_project(a: &ProjectArgs) -> CmdResult {
    if a.coord == 0 || a.coord > a.d {
        return Err(Failure::usage(format!("--coord must lie in 1..={}", a.d)));
    }
    let res = a.resolution.resolve(a.d);
    let req = ProjectionRequest {
        d: a.d,
        layers: a.layers,
        coord: a.coord - 1,
        b: a.b,
        k: a.order,
        p: a.p,
        eps: a.eps,
        resolution: res,
    };
    let echo = Echo::new("project")
        .flag("activation", a.activation)
        .flag("d", a.d)
        .flag("L", a.layers)
        .flag("coord", a.coord)
        .flag("B", a.b)
        .flag("order", a.order)
        .flag("p", a.p)
        .flag("eps", a.eps)
        .flag("panels", res.panels)
        .flag("nodes", res.nodes);
    let result = projection_net(&a.activation, &req)?;
    let mut csv = Csv::new(&echo, &["C", "error"]);
    csv.comment(&format!("accepted C: {}, error: {}, total_norm: {}", result.c, result.error, result.net.total_norm().value()));
    for (c, e) in &result.history {
        csv.row(&[c.to_string(), e.to_string()]);
    }
    csv.emit(a.out.as_deref())?;
    save_net(a.save_net.as_deref(), &result.net)?;
    Ok(EXIT_OK)
}

/// Resolves training flags over the preset; returns the config and its echo.
pub fn resolve_train(a: &TrainArgs, subcommand: &str, default_preset: Preset) -> Result<(TrainConfig, Echo), Failure> {
    let preset = a.preset.unwrap_or(default_preset);
    let base = TrainConfig::preset(preset);
    let (base_kind, base_knots, base_range, base_coord) = match base.target {
        TargetSpec::PiecewiseLinear { knots, range } => ("pwl", knots, range, 0),
        TargetSpec::PiecewiseQuadratic { knots, range } => ("pwq", knots, range, 0),
        TargetSpec::Projection { coord } => ("proj", 6, (-3.0, 3.0), coord),
        TargetSpec::ActivationDerivative => ("rho-prime", 6, (-3.0, 3.0), 0),
    };
    let kind = a.target.clone().unwrap_or_else(|| base_kind.to_string());
    let knots = a.knots.unwrap_or(base_knots);
    let range = (a.range_lo.unwrap_or(base_range.0), a.range_hi.unwrap_or(base_range.1));
    let coord = a.coord.unwrap_or(base_coord + 1);
    if coord == 0 {
        return Err(Failure::usage("--coord is 1-based"));
    }
    let target = match kind.as_str() {
        "pwl" => TargetSpec::PiecewiseLinear { knots, range },
        "pwq" => TargetSpec::PiecewiseQuadratic { knots, range },
        "proj" => TargetSpec::Projection { coord: coord - 1 },
        "rho-prime" => TargetSpec::ActivationDerivative,
        other => return Err(Failure::usage(format!("unknown target {other:?}"))),
    };
    let adam = AdamConfig {
        lr: a.lr.unwrap_or(base.adam.lr),
        beta1: a.beta1.unwrap_or(base.adam.beta1),
        beta2: a.beta2.unwrap_or(base.adam.beta2),
        eps: a.adam_eps.unwrap_or(base.adam.eps),
    };
    let config = TrainConfig {
        arch: a.arch.clone().unwrap_or(base.arch),
        act: a.activation.unwrap_or(base.act),
        order: a.order.unwrap_or(base.order),
        b: a.b.unwrap_or(base.b),
        target,
        epochs: a.epochs.unwrap_or(base.epochs),
        batch: a.batch.unwrap_or(base.batch),
        adam,
        init_scale: a.init_scale.unwrap_or(base.init_scale),
        clamp: a.clamp.map_or(base.clamp, |c| c.0),
        trials: a.trials.unwrap_or(base.trials),
        seed: a.seed.unwrap_or(base.seed),
        checkpoint_every: a.checkpoint_every.unwrap_or(base.checkpoint_every),
        test_batch: a.test_batch.unwrap_or(base.test_batch),
    };
    config.validate()?;
    let s = config.act.smoothness();
    if config.order > s.order() && !(s.weak_next_derivative && config.order == s.order() + 1) {
        return Err(Failure::usage(format!("order {} is too high for {}", config.order, config.act)));
    }
    let mut echo = Echo::new(subcommand)
        .flag("preset", preset)
        .flag("arch", &config.arch)
        .flag("activation", config.act)
        .flag("order", config.order)
        .flag("B", config.b)
        .flag("target", &kind)
        .flag("knots", knots)
        .flag("range-lo", range.0)
        .flag("range-hi", range.1)
        .flag("coord", coord)
        .flag("epochs", config.epochs)
        .flag("batch", config.batch)
        .flag("lr", config.adam.lr)
        .flag("beta1", config.adam.beta1)
        .flag("beta2", config.adam.beta2)
        .flag("adam-eps", config.adam.eps)
        .flag("init-scale", config.init_scale)
        .flag("clamp", Clamp(config.clamp))
        .flag("trials", config.trials)
        .flag("seed", config.seed)
        .flag("checkpoint-every", config.checkpoint_every)
        .flag("test-batch", config.test_batch);
    if let Some(p) = &a.load_net {
        echo = echo.flag("load-net", p.display());
    }
    Ok((config, echo))
}

fn load_net(a: &TrainArgs) -> Result<Option<Network>, Failure> {
    match &a.load_net {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(Some(Network::from_text(&text)?))
        }
        None => Ok(None),
    }
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let (config, echo) = resolve_train(a, "train", Preset::EluPwl)?;
    let init = load_net(a)?;
    let result = run_experiment(&config, init.as_ref())?;
    let mut trials = Csv::new(&echo, &["trial", "epoch", "loss", "best_loss", "total_norm"]);
    for t in &result.trials {
        if t.diverged {
            trials.comment(&format!("trial {} diverged after {} epochs", t.trial, t.records.len()));
        }
    }
    for t in &result.trials {
        for r in &t.records {
            trials.row(&[
                r.trial.to_string(),
                r.epoch.to_string(),
                r.loss.to_string(),
                r.best_loss.to_string(),
                r.total_norm.to_string(),
            ]);
        }
    }
    let mut agg = Csv::new(&echo, &["epoch", "mean_best_loss", "mean_norm", "norm_lo95", "norm_hi95"]);
    for r in &result.aggregate {
        agg.row(&[
            r.epoch.to_string(),
            r.mean_best_loss.to_string(),
            r.mean_norm.to_string(),
            r.norm_lo95.to_string(),
            r.norm_hi95.to_string(),
        ]);
    }
    fs::create_dir_all(&a.outdir)?;
    trials.emit(Some(&a.outdir.join("trials.csv")))?;
    agg.emit(Some(&a.outdir.join("aggregate.csv")))?;
    if let Some(dir) = &a.save_net {
        for t in &result.trials {
            save_net(Some(&dir.join(format!("trial_{}.net", t.trial))), &t.net)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_scatter(a: &TrainArgs) -> CmdResult {
    let (config, echo) = resolve_train(a, "scatter", Preset::RateSoftsign)?;
    if config.checkpoint_every == 0 {
        return Err(Failure::usage("scatter needs --checkpoint-every > 0"));
    }
    let init = load_net(a)?;
    let result = run_experiment(&config, init.as_ref())?;
    let mut csv = Csv::new(&echo, &["checkpoint", "loss", "total_norm"]);
    csv.comment("checkpoints are numbered trial by trial, in epoch order; loss is on a fixed test batch");
    let mut k = 0usize;
    for t in result.trials.iter().filter(|t| !t.diverged) {
        for c in &t.checkpoints {
            csv.row(&[k.to_string(), c.loss.to_string(), c.total_norm.to_string()]);
            k += 1;
        }
    }
    csv.emit(a.out.as_deref())?;
    if let Some(dir) = &a.save_net {
        for t in &result.trials {
            save_net(Some(&dir.join(format!("trial_{}.net", t.trial))), &t.net)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_plot(a: &PlotArgs) -> CmdResult {
    let text = fs::read_to_string(&a.input)?;
    let table = Table::parse(&text).ok_or_else(|| Failure::usage("empty CSV"))?;
    let spec = PlotSpec {
        x: a.x.clone().unwrap_or_else(|| table.columns[0].clone()),
        ys: a.y.split(',').map(|s| s.trim().to_string()).collect(),
        logx: a.logx,
        logy: a.logy,
        scatter: a.scatter,
        title: a.title.clone().unwrap_or_default(),
    };
    let svg = plot::render(&table, &spec).map_err(Failure::usage)?;
    match &a.out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, svg)?;
        }
        None => print!("{svg}"),
    }
    Ok(EXIT_OK)
}
