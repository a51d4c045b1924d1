//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use sobolev_nets::calculus::{
    sobolev_error, BoxDomain, Exponent, QuadratureGrid, Realization, Resolution, SobolevSpec,
};
use sobolev_nets::constructions::{projection_net, thm1_sequence, thm2_sequence, ProjectionRequest, TargetFunction};
use sobolev_nets::rates::{bound_constant, log_log_slope, measure, nonnegative_branch_error, rate_grid, verify_rate};
use sobolev_nets::rng;
use sobolev_nets::training::{loss_gradient, median, run_experiment, sobolev_loss, Preset, TrainConfig, TrialResult};
use sobolev_nets::{Activation, Architecture, Network};

const NS: [u64; 8] = [1, 2, 5, 10, 50, 100, 500, 1000];
const SMOOTH_ACTS: [Activation; 7] = [
    Activation::Sigmoid,
    Activation::Tanh,
    Activation::Arctan,
    Activation::Softsign,
    Activation::Elu,
    Activation::Isrlu { a: 1.0 },
    Activation::Isru { a: 1.0 },
];

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn grid_1d(b: f64) -> QuadratureGrid {
    QuadratureGrid::new(BoxDomain::new(b, 1), Resolution::DEFAULT_1D).unwrap()
}

#[test]
fn criterion_01_softsign_sup_rate() {
    let t = Instant::now();
    let recs = verify_rate(&Activation::Softsign, Exponent::Infinity, 5.0, &NS, Resolution::DEFAULT_1D).unwrap();
    let oracle_ok = recs.iter().all(|r| r.measured_error <= 64.0 / (27.0 * r.n as f64) + 1e-6);
    let elapsed = t.elapsed();
    let worst = recs.iter().map(|r| r.measured_error / r.bound).fold(0.0, f64::max);
    let pass = oracle_ok && recs.iter().all(|r| r.pass) && elapsed < Duration::from_secs(10);
    report(1, "softsign sup-rate", pass, format!("max error/bound {worst:.4}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_02_elu_rates() {
    let t = Instant::now();
    let b = 5.0;
    let grid = grid_1d(b);
    let mut pass = true;
    let mut worst = 0.0f64;
    for n in NS {
        let e = measure(&Activation::Elu, n, Exponent::Infinity, &grid).unwrap();
        pass &= e <= 1.0 / n as f64 + 1e-6;
        worst = worst.max(e * n as f64);
        // the positive branch is affine, so only rounding survives there
        let tol = 16.0 * f64::EPSILON * n as f64 * (b + 1.0);
        pass &= nonnegative_branch_error(&Activation::Elu, n, &grid).unwrap() <= tol;
    }
    for p in [1.0f64, 2.0] {
        let k = (1.0 / (p + 1.0) + 1.0 / (2f64.powf(p) * p)).powf(1.0 / p);
        let rb = bound_constant(&Activation::Elu, Exponent::Finite(p), b).unwrap();
        pass &= (rb.per_n - k).abs() < 1e-15;
        for n in NS {
            let e = measure(&Activation::Elu, n, Exponent::Finite(p), &grid).unwrap();
            pass &= e <= k / n as f64 + 1e-6;
            worst = worst.max(e * n as f64 / k);
        }
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report(2, "ELU rates", pass, format!("max n*error/K {worst:.4}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_03_cm_rate() {
    let t = Instant::now();
    // |σ''| peaks where σ = (3 ± √3)/6, giving 1/(6√3); |tanh''| peaks at 4/(3√3)
    let sig = bound_constant(&Activation::Sigmoid, Exponent::Infinity, 5.0).unwrap();
    let tanh = bound_constant(&Activation::Tanh, Exponent::Infinity, 5.0).unwrap();
    let mut pass = (sig.per_n * 2.0 - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-12
        && (tanh.per_n * 2.0 - 4.0 / (3.0 * 3f64.sqrt())).abs() < 1e-12;
    let mut worst = 0.0f64;
    for act in [Activation::Sigmoid, Activation::Tanh] {
        let recs = verify_rate(&act, Exponent::Infinity, 5.0, &NS, Resolution::DEFAULT_1D).unwrap();
        pass &= recs.iter().all(|r| r.pass);
        worst = recs.iter().map(|r| r.measured_error / r.bound).fold(worst, f64::max);
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report(3, "C^m rate (sigmoid, tanh)", pass, format!("max error/bound {worst:.4}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_04_inverse_proportionality() {
    let ns: Vec<u64> = (0..=9).map(|e| 1u64 << e).collect();
    let mut pass = true;
    let mut slopes = Vec::new();
    for act in [Activation::Softsign, Activation::Elu] {
        let recs = verify_rate(&act, Exponent::Finite(2.0), 5.0, &ns, Resolution::DEFAULT_1D).unwrap();
        let norms: Vec<f64> = recs.iter().map(|r| r.total_norm).collect();
        let errs: Vec<f64> = recs.iter().map(|r| r.measured_error).collect();
        let grid = rate_grid(&act, 1, 5.0, Resolution::DEFAULT_1D).unwrap();
        assert_eq!(errs[0], measure(&act, 1, Exponent::Finite(2.0), &grid).unwrap());
        let s = log_log_slope(&norms, &errs);
        pass &= (-1.15..=-0.85).contains(&s);
        slopes.push(format!("{act} {s:.4}"));
    }
    report(4, "inverse-proportionality slope", pass, slopes.join(", "));
    assert!(pass);
}

#[test]
fn criterion_05_thm1_sobolev_convergence() {
    let t = Instant::now();
    let b = 5.0;
    let grid = grid_1d(b);
    let ns: Vec<u64> = (0..=8).map(|e| 1u64 << e).collect();
    let cases = [
        (Activation::Softsign, 1usize, 1.0f64),
        (Activation::Softsign, 1, 2.0),
        (Activation::Elu, 1, 1.0),
        (Activation::Elu, 1, 2.0),
        (Activation::Isrlu { a: 1.0 }, 1, 1.0),
        (Activation::Isrlu { a: 1.0 }, 1, 2.0),
        (Activation::Isrlu { a: 1.0 }, 2, 1.0),
        (Activation::Isrlu { a: 1.0 }, 2, 2.0),
    ];
    let mut pass = true;
    let mut worst_ratio = 0.0f64;
    for (act, k, p) in cases {
        let spec = SobolevSpec { order: k, p: Exponent::Finite(p), domain: BoxDomain::new(b, 1), resolution: Resolution::DEFAULT_1D };
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let (net, target) = thm1_sequence(&act, 1, 2, b, n, 1.0).unwrap();
                sobolev_error(&Realization::new(&net, act), &target, &spec, &grid).unwrap()
            })
            .collect();
        let ratio = errs[errs.len() - 1] / errs[0];
        worst_ratio = worst_ratio.max(ratio);
        let monotone = errs.windows(2).all(|w| w[1] <= 1.05 * w[0]);
        if !(ratio <= 0.1 && monotone) {
            println!("  {act} k={k} p={p}: {errs:?}");
            pass = false;
        }
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(5, "non-closedness sequence converges in W^{k,p}", pass, format!("worst e(256)/e(1) {worst_ratio:.4}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_06_projection_approximators() {
    let t = Instant::now();
    let b = 5.0;
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut count = 0;
    for act in [Activation::Sigmoid, Activation::Tanh] {
        for d in [1usize, 2] {
            for layers in [2usize, 3] {
                for k in [1usize, 2] {
                    for eps in [0.5, 0.1] {
                        let coord = (layers + k) % d;
                        let resolution = Resolution::default_for(d);
                        let req = ProjectionRequest { d, layers, coord, b, k, p: Exponent::Finite(2.0), eps, resolution };
                        let ok = match projection_net(&act, &req) {
                            Ok(res) => {
                                let fine = resolution.refined(2);
                                let spec = SobolevSpec { order: k, p: Exponent::Finite(2.0), domain: BoxDomain::new(b, d), resolution: fine };
                                let grid = spec.grid().unwrap();
                                let target = TargetFunction::Projection { dim: d, coord };
                                let e = sobolev_error(&Realization::new(&res.net, act), &target, &spec, &grid).unwrap();
                                worst = worst.max(e / eps);
                                e <= 2.0 * eps && res.net.architecture().num_layers() == layers
                            }
                            Err(e) => {
                                println!("  {act} d={d} L={layers} k={k} eps={eps}: {e}");
                                false
                            }
                        };
                        pass &= ok;
                        count += 1;
                    }
                }
            }
        }
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(6, "projection approximators", pass, format!("{count} cases, max refined error/eps {worst:.4}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_07_analytic_sequence() {
    let act = Activation::Sigmoid;
    let b = 5.0;
    let res = Resolution::DEFAULT_1D;
    let spec = SobolevSpec { order: 1, p: Exponent::Finite(2.0), domain: BoxDomain::new(b, 1), resolution: res };
    let grid = spec.grid().unwrap();
    let errs: Vec<f64> = (0..=6)
        .map(|e| {
            let m = thm2_sequence(&act, 1, 3, b, 1, Exponent::Finite(2.0), 1u64 << e, res).unwrap();
            sobolev_error(&Realization::new(&m.net, act), &m.target, &spec, &grid).unwrap()
        })
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && errs[6] <= errs[0] / 5.0;
    report(7, "analytic sequence approaches the unbounded target", pass, format!("errors {:.4} -> {:.4}", errs[0], errs[6]));
    assert!(pass);
}

fn random_arch(rng: &mut impl Rng, input: usize, output: usize) -> Architecture {
    let depth = rng.gen_range(1..=3);
    let mut widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=5)).collect();
    widths.push(output);
    Architecture::new(input, widths).unwrap()
}

/// Hidden pre-activations of `net` at `x`.
fn preactivations(net: &Network, act: &Activation, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let mut out = Vec::new();
    let layers = net.layers();
    for layer in &layers[..layers.len() - 1] {
        let z: Vec<f64> = (0..layer.rows())
            .map(|i| layer.bias()[i] + layer.row(i).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        y = z.iter().map(|&v| act.eval(v)).collect();
        out.extend(z);
    }
    out
}

fn kink_distance(net: &Network, act: &Activation, x: &[f64]) -> f64 {
    let kinks = act.smoothness().kinks;
    preactivations(net, act, x)
        .iter()
        .flat_map(|z| kinks.iter().map(move |k| (z - k).abs()))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_08_structural_oracles() {
    let mut rng = rng::stream(8, rng::streams::TEST);

    // concatenation realizes composition
    let mut concat_err = 0.0f64;
    for case in 0..100u64 {
        let act = SMOOTH_ACTS[case as usize % SMOOTH_ACTS.len()];
        let d = rng.gen_range(1..=3);
        let mid = rng.gen_range(1..=3);
        let inner = Network::random_init(&random_arch(&mut rng, d, mid), rng::mix(case, 1), 1.0);
        let out_dim = rng.gen_range(1..=2);
        let outer = Network::random_init(&random_arch(&mut rng, mid, out_dim), rng::mix(case, 2), 1.0);
        let both = Network::concat(&outer, &inner).unwrap();
        assert_eq!(both.layers().len(), outer.layers().len() + inner.layers().len() - 1);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let want = outer.realize(&act, &inner.realize(&act, &x).unwrap()).unwrap();
        let got = both.realize(&act, &x).unwrap();
        for (g, w) in got.iter().zip(&want) {
            concat_err = concat_err.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    let concat_ok = concat_err <= 1e-12;

    // jets against central differences of the next-lower derivative
    let h = 1e-5;
    let mut jet_err = 0.0f64;
    let mut jet_cases = 0;
    while jet_cases < 100 {
        let act = SMOOTH_ACTS[jet_cases % SMOOTH_ACTS.len()];
        let d = rng.gen_range(1..=2);
        let net = Network::random_init(&random_arch(&mut rng, d, 1), rng.gen(), 1.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shifted = |s: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        let clear = [-1.0, 0.0, 1.0].iter().all(|&s| kink_distance(&net, &act, &shifted(s * h)) > 1e-3);
        if !clear {
            continue;
        }
        let order = 3;
        let jet = net.realize_jet(&act, &x, &dir, order).unwrap();
        let up = net.realize_jet(&act, &shifted(h), &dir, order - 1).unwrap();
        let down = net.realize_jet(&act, &shifted(-h), &dir, order - 1).unwrap();
        assert_eq!(jet.value(), net.realize_scalar(&act, &x).unwrap());
        for j in 1..=order {
            let fd = (up.derivative(j - 1) - down.derivative(j - 1)) / (2.0 * h);
            jet_err = jet_err.max((jet.derivative(j) - fd).abs() / fd.abs().max(1.0));
        }
        jet_cases += 1;
    }
    let jet_ok = jet_err <= 1e-6;

    // loss gradient against central differences in parameter space
    let mut grad_err = 0.0f64;
    let mut grad_cases = 0;
    let target = TargetFunction::activation_derivative(Activation::Tanh);
    while grad_cases < 50 {
        let act = SMOOTH_ACTS[grad_cases % SMOOTH_ACTS.len()];
        let k = grad_cases % 3;
        let arch = Architecture::new(1, vec![rng.gen_range(1..=4), 1]).unwrap();
        let net = Network::random_init(&arch, rng.gen(), 1.0);
        let batch: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-3.0..3.0)]).collect();
        if batch.iter().any(|x| kink_distance(&net, &act, x) < 1e-2) {
            continue;
        }
        let grad = loss_gradient(&net, &act, &target, k, &batch).unwrap();
        let params = net.params();
        let hp = 1e-6;
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for (i, g) in grad.iter().enumerate() {
            let mut probe = net.clone();
            let mut p = params.clone();
            p[i] += hp;
            probe.set_params(&p);
            let fwd = sobolev_loss(&probe, &act, &target, k, &batch).unwrap();
            p[i] -= 2.0 * hp;
            probe.set_params(&p);
            let back = sobolev_loss(&probe, &act, &target, k, &batch).unwrap();
            let fd = (fwd - back) / (2.0 * hp);
            diff = diff.max((g - fd).abs());
            scale = scale.max(fd.abs());
        }
        grad_err = grad_err.max(diff / scale.max(1e-3));
        grad_cases += 1;
    }
    let grad_ok = grad_err <= 1e-4;

    let grid = QuadratureGrid::new(BoxDomain::new(1.0, 1), Resolution::new(7, 5)).unwrap();
    let quad_err = (grid.integrate(|x| x[0] * x[0]) - 2.0 / 3.0).abs();
    let quad_ok = quad_err <= 1e-12;

    let pass = concat_ok && jet_ok && grad_ok && quad_ok;
    report(
        8,
        "structural oracles",
        pass,
        format!("concat {concat_err:.1e}, jet {jet_err:.1e}, gradient {grad_err:.1e}, quadrature {quad_err:.1e}"),
    );
    assert!(pass);
}

fn training_summary(trials: &[TrialResult]) -> (f64, f64, f64, f64) {
    let live: Vec<&TrialResult> = trials.iter().filter(|t| !t.diverged).collect();
    let first_loss = median(&live.iter().map(|t| t.records[0].loss).collect::<Vec<_>>());
    let final_best = median(&live.iter().map(|t| t.records.last().unwrap().best_loss).collect::<Vec<_>>());
    let first_norm = median(&live.iter().map(|t| t.records[0].total_norm).collect::<Vec<_>>());
    let final_norm = median(&live.iter().map(|t| t.net.total_norm().value()).collect::<Vec<_>>());
    (first_loss, final_best, first_norm, final_norm)
}

#[test]
fn criterion_09_training_reproduction() {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [Preset::EluPwl, Preset::IsrluPwq, Preset::SigmoidProj] {
        let config = TrainConfig::preset(preset);
        let result = run_experiment(&config, None).unwrap();
        let (l0, lf, n0, nf) = training_summary(&result.trials);
        let loss_ok = lf <= 0.2 * l0;
        let norm_ok = preset == Preset::SigmoidProj || nf >= 1.5 * n0;
        pass &= loss_ok && norm_ok;
        parts.push(format!("{preset} loss x{:.3} norm x{:.2}", lf / l0, nf / n0));
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(15 * 60);
    report(9, "training reproduction", pass, format!("{}, {elapsed:.1?}", parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_10_bounded_weight_signature() {
    let free = TrainConfig::preset(Preset::RateSoftsign);
    let clamped = TrainConfig { clamp: Some(2.0), ..free.clone() };
    let final_loss = |trials: &[TrialResult]| -> f64 {
        median(&trials.iter().filter(|t| !t.diverged).map(|t| t.checkpoints.last().unwrap().loss).collect::<Vec<_>>())
    };
    let a = run_experiment(&free, None).unwrap();
    let c = run_experiment(&clamped, None).unwrap();
    let seeds_paired = a.trials.iter().zip(&c.trials).all(|(x, y)| x.seed == y.seed);
    let max_norm = c
        .trials
        .iter()
        .flat_map(|t| t.records.iter().map(|r| r.total_norm).chain(t.checkpoints.iter().map(|k| k.total_norm)))
        .fold(0.0f64, f64::max);
    let (lf, lc) = (final_loss(&a.trials), final_loss(&c.trials));
    let pass = seeds_paired && lc >= lf && max_norm <= 4.0;
    report(10, "bounded-weight signature", pass, format!("median final loss clamped {lc:.6} vs free {lf:.6}, max clamped norm {max_norm:.4}"));
    assert!(pass);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sobolev-nets"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Runs `args` writing to `first`, then replays its echoed command with another
/// thread count writing to `second`.
fn replay(args: &[&str], first: &PathBuf, second: &PathBuf, out_flag: &str, file: Option<&str>) -> bool {
    let status = bin().args(args).args(["--threads", "1", out_flag]).arg(first).status().unwrap();
    if !status.success() {
        return false;
    }
    let read = |p: &PathBuf| fs::read(file.map_or(p.clone(), |f| p.join(f))).unwrap();
    let a = read(first);
    let echoed = sobolev_nets::cli::output::echoed_command(std::str::from_utf8(&a).unwrap()).unwrap();
    let status = bin().args(&echoed).args(["--threads", "4", out_flag]).arg(second).status().unwrap();
    status.success() && read(second) == a
}

#[test]
fn criterion_11_determinism() {
    let cases: Vec<(&str, Vec<&str>, &str, Option<&str>)> = vec![
        ("activations", vec!["activations"], "--out", None),
        ("rates", vec!["rates", "--activation", "elu", "--p", "2", "--ns", "1,10,100"], "--out", None),
        ("converge", vec!["converge", "--activation", "softsign", "--order", "1", "--ns", "1,4,16"], "--out", None),
        ("converge-analytic", vec!["converge", "--activation", "tanh", "--analytic", "--order", "1", "--ns", "1,2,4"], "--out", None),
        ("project", vec!["project", "--activation", "tanh", "--d", "2", "--coord", "2", "--eps", "0.5"], "--out", None),
        ("train", vec!["train", "--preset", "isrlu-pwq", "--epochs", "30", "--trials", "4"], "--outdir", Some("trials.csv")),
        ("train-aggregate", vec!["train", "--preset", "sigmoid-proj", "--epochs", "20", "--trials", "3"], "--outdir", Some("aggregate.csv")),
        ("scatter", vec!["scatter", "--epochs", "250", "--trials", "3", "--clamp", "2"], "--out", None),
    ];
    let mut failed = Vec::new();
    for (name, args, flag, file) in &cases {
        let ok = replay(args, &tmp(&format!("{name}-a")), &tmp(&format!("{name}-b")), flag, *file);
        if !ok {
            failed.push(*name);
        }
    }
    let pass = failed.is_empty();
    report(11, "determinism", pass, format!("{} subcommand runs replayed, failures: {failed:?}", cases.len()));
    assert!(pass);
}
