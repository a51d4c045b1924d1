use std::sync::Arc;

use proptest::prelude::*;
use sobolev_nets::calculus::{
    lp_error, sobolev_error, BoxDomain, Exponent, FnField, Jet, JetLayout, QuadratureGrid, Realization, Resolution,
    SobolevSpec,
};
use sobolev_nets::constructions::{thm1_sequence, thm2_sequence, TargetFunction};
use sobolev_nets::rates::{measure, rate_grid, verify_rate};
use sobolev_nets::{Activation, Architecture, Network};

fn catalog() -> Vec<Activation> {
    Activation::catalog()
}

fn near_kink(act: &Activation, x: f64, radius: f64) -> bool {
    act.smoothness().kinks.iter().any(|k| (x - k).abs() < radius)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn activation_jets_match_finite_differences(x in -6.0f64..6.0) {
        let h = 1e-5;
        for act in catalog() {
            if near_kink(&act, x, 1e-3) {
                continue;
            }
            let order = if act.smoothness().order() == 0 { 1 } else { 4 };
            let jet = act.eval_jet(x, order);
            let up = act.eval_jet(x + h, order - 1);
            let down = act.eval_jet(x - h, order - 1);
            prop_assert_eq!(jet.value(), act.eval(x));
            for j in 1..=order {
                let fd = (up.derivative(j - 1) - down.derivative(j - 1)) / (2.0 * h);
                let got = jet.derivative(j);
                prop_assert!((got - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{} order {} at {}: {} vs {}", act, j, x, got, fd);
            }
        }
    }

    #[test]
    fn monotone_entries_have_positive_slope(x in -40.0f64..40.0) {
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Arctan, Activation::Softsign, Activation::Isru { a: 1.0 }] {
            prop_assert!(act.derivative(x) > 0.0, "{} at {}", act, x);
        }
    }

    #[test]
    fn bounded_entries_respect_their_bound(x in -1e6f64..1e6) {
        for act in catalog() {
            if let Some(bound) = act.smoothness().sup_bound {
                prop_assert!(act.eval(x).abs() <= bound, "{} at {}", act, x);
            }
        }
    }

    #[test]
    fn lp_errors_obey_the_triangle_inequality(a in -2.0f64..2.0, b in -2.0f64..2.0, p in 1.0f64..4.0) {
        let grid = QuadratureGrid::new(BoxDomain::new(3.0, 1), Resolution::new(50, 4)).unwrap();
        let f = |x: &[f64]| (a * x[0]).sin();
        let g = |x: &[f64]| b * x[0];
        let h = |x: &[f64]| x[0].tanh();
        for p in [Exponent::Finite(p), Exponent::Infinity] {
            let fg = lp_error(f, g, p, &grid).unwrap();
            let gh = lp_error(g, h, p, &grid).unwrap();
            let fh = lp_error(f, h, p, &grid).unwrap();
            prop_assert!(fg >= 0.0 && gh >= 0.0 && fh >= 0.0);
            prop_assert!(fh <= fg + gh + 1e-10);
        }
    }

    #[test]
    fn order_zero_sobolev_error_is_lp_error(seed in any::<u64>(), p in 1.0f64..3.0) {
        let act = Activation::Tanh;
        let net = Network::random_init(&Architecture::parse("1,4,1").unwrap(), seed, 1.0);
        let target = TargetFunction::activation_derivative(Activation::Sigmoid);
        let spec = SobolevSpec { order: 0, p: Exponent::Finite(p), domain: BoxDomain::new(2.0, 1), resolution: Resolution::new(40, 5) };
        let grid = spec.grid().unwrap();
        let s = sobolev_error(&Realization::new(&net, act), &target, &spec, &grid).unwrap();
        let l = lp_error(
            |x| net.realize_scalar(&act, x).unwrap(),
            |x| target.eval(x).unwrap(),
            Exponent::Finite(p),
            &grid,
        )
        .unwrap();
        prop_assert_eq!(s, l);
    }
}

#[test]
fn refinement_barely_moves_rate_errors() {
    for act in catalog().into_iter().filter(|a| *a != Activation::Relu) {
        for n in [1u64, 10, 100, 1000] {
            let coarse = rate_grid(&act, n, 5.0, Resolution::DEFAULT_1D).unwrap();
            let fine = rate_grid(&act, n, 5.0, Resolution::DEFAULT_1D.refined(2)).unwrap();
            for p in [1.0, 2.0] {
                let a = measure(&act, n, Exponent::Finite(p), &coarse).unwrap();
                let b = measure(&act, n, Exponent::Finite(p), &fine).unwrap();
                assert!((a - b).abs() <= 1e-6 * b, "{act} p={p} n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn softsign_and_elu_records_pass_for_every_exponent() {
    let ns = [1, 3, 10, 30, 100, 300, 1000];
    for act in [Activation::Softsign, Activation::Elu] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            let recs = verify_rate(&act, p, 5.0, &ns, Resolution::DEFAULT_1D).unwrap();
            assert!(recs.iter().all(|r| r.pass), "{act} p={p}: {recs:?}");
            assert!(recs.windows(2).all(|w| w[0].n < w[1].n));
        }
    }
}

fn thm1_errors(act: Activation, k: usize, p: Exponent) -> Vec<f64> {
    let spec = SobolevSpec { order: k, p, domain: BoxDomain::new(5.0, 1), resolution: Resolution::DEFAULT_1D };
    let grid = spec.grid().unwrap();
    (0..=8)
        .map(|e| {
            let (net, target) = thm1_sequence(&act, 1, 2, 5.0, 1u64 << e, 1.0).unwrap();
            sobolev_error(&Realization::new(&net, act), &target, &spec, &grid).unwrap()
        })
        .collect()
}

#[test]
fn classical_order_sequences_converge_for_every_exponent() {
    for act in [Activation::Softsign, Activation::Elu, Activation::Isrlu { a: 1.0 }] {
        let k = act.smoothness().order() - 1;
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            let errs = thm1_errors(act, k, p);
            assert!(errs.windows(2).all(|w| w[1] <= 1.05 * w[0]), "{act} k={k} p={p}: {errs:?}");
            assert!(errs[8] <= errs[0] / 10.0, "{act} k={k} p={p}: {errs:?}");
        }
    }
}

#[test]
fn outer_network_is_stable_under_projection_approximation() {
    let act = Activation::Sigmoid;
    let res = Resolution::default_for(2);
    let spec = SobolevSpec { order: 1, p: Exponent::Finite(2.0), domain: BoxDomain::new(5.0, 2), resolution: res };
    let grid = spec.grid().unwrap();
    let ns = [2u64, 4, 8, 16, 32, 64];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let m = thm2_sequence(&act, 2, 3, 5.0, 1, Exponent::Finite(2.0), n, res).unwrap();
            let outer = m.outer.clone();
            let on_projection = FnField::new(2, move |x: &[f64], l: &Arc<JetLayout>| {
                Ok(outer.realize_jets(&act, &[Jet::variable(l, x[0], 0)])?.remove(0))
            });
            sobolev_error(&Realization::new(&m.net, act), &on_projection, &spec, &grid).unwrap()
        })
        .collect();
    // the projection scale moves every other n, so compare across quadruplings
    assert!(errs.windows(3).all(|w| w[2] < w[0]), "{errs:?}");
    assert!(errs[5] <= errs[0] / 10.0, "{errs:?}");
}
