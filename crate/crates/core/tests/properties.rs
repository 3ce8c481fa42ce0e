mod common;

use approx::assert_relative_eq;
use common::{circle, sup_diff};
use proptest::prelude::*;
use shrinkdyn::config::Config;
use shrinkdyn::experiments::drift::eps_grid;
use shrinkdyn::fourier::TrigBasis;
use shrinkdyn::report::{fmt17, linear_fit};
use shrinkdyn::spectral::{semigroup_apply, SpectralDecomposition};
use shrinkdyn::ShrinkerGeometry;
use std::sync::OnceLock;

fn circle64() -> &'static (ShrinkerGeometry, SpectralDecomposition) {
    static C: OnceLock<(ShrinkerGeometry, SpectralDecomposition)> = OnceLock::new();
    C.get_or_init(|| circle(64))
}

fn low_modes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 9)
}

fn embed(c: &[f64], k: usize) -> Vec<f64> {
    let mut full = vec![0.0; k];
    full[..c.len()].copy_from_slice(c);
    full
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_invert_synthesis(c in low_modes()) {
        let (_, spec) = circle64();
        let full = embed(&c, spec.k());
        let back = spec.coeffs(&spec.synth(&full));
        prop_assert!(sup_diff(&back, &full) < 1e-10);
    }

    #[test]
    fn norm_is_parseval(c in low_modes()) {
        let (_, spec) = circle64();
        let u = spec.synth(&embed(&c, spec.k()));
        let l2 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((spec.norm(&u) - l2).abs() <= 1e-10 * (1.0 + l2));
    }

    #[test]
    fn semigroup_composes(c in low_modes(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let (_, spec) = circle64();
        let u = spec.synth(&embed(&c, spec.k()));
        let a = semigroup_apply(spec, t, &semigroup_apply(spec, s, &u).unwrap()).unwrap();
        let b = semigroup_apply(spec, s + t, &u).unwrap();
        prop_assert!(sup_diff(&a, &b) < 1e-9 * (1.0 + b.iter().fold(0.0f64, |m, x| m.max(x.abs()))));
    }

    #[test]
    fn trig_derivative_exact_below_nyquist(k in 1usize..15, a in -2.0f64..2.0, b in -2.0f64..2.0, offset in 0.0f64..1.0) {
        let basis = TrigBasis::new(32, offset);
        let th = basis.nodes();
        let u: Vec<f64> = th.iter().map(|t| a * (k as f64 * t).cos() + b * (k as f64 * t).sin()).collect();
        let du: Vec<f64> = th.iter().map(|t| k as f64 * (-a * (k as f64 * t).sin() + b * (k as f64 * t).cos())).collect();
        let d = basis.diff_matrix(1);
        let got: Vec<f64> = (0..32).map(|i| (0..32).map(|j| d[(i, j)] * u[j]).sum()).collect();
        prop_assert!(sup_diff(&got, &du) < 1e-10 * k as f64 * 4.0);
    }

    #[test]
    fn interpolation_reproduces_nodes(vals in prop::collection::vec(-5.0f64..5.0, 16), j in 0usize..16) {
        let basis = TrigBasis::new(16, 0.3);
        prop_assert!((basis.interpolate(&vals, basis.node(j), 0) - vals[j]).abs() < 1e-12);
    }

    #[test]
    fn eps_grid_holds_eps_star(e in prop_oneof![-3.0f64..-1e-3, 1e-3f64..3.0], points in 3usize..12) {
        let g = eps_grid(e, points);
        prop_assert_eq!(g.len(), points);
        prop_assert!(g.contains(&e));
        prop_assert!(g.iter().all(|x| x.abs() <= 2.0 * e.abs() * (1.0 + 1e-12)));
    }

    #[test]
    fn line_fit_is_exact(m in -10.0f64..10.0, q in -10.0f64..10.0) {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|v| m * v + q).collect();
        let (slope, icept, resid) = linear_fit(&x, &y);
        prop_assert!((slope - m).abs() < 1e-9 && (icept - q).abs() < 1e-9 && resid < 1e-9);
    }

    #[test]
    fn csv_floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn seed_override_round_trips(seed in any::<u64>()) {
        let cfg = Config::load(Some(&format!("[run]\nseed = {}\n", seed as i64 & i64::MAX))).unwrap();
        let again = Config::load(Some(&cfg.to_toml())).unwrap();
        prop_assert_eq!(again.to_toml(), cfg.to_toml());
    }
}

#[test]
fn circle_eigenvalues_closed_form() {
    let (_, spec) = circle64();
    let mut want: Vec<f64> = vec![1.0];
    for k in 1..6 {
        want.extend([1.0 - (k * k) as f64 / 2.0; 2]);
    }
    for (got, w) in spec.eigenvalues.iter().zip(&want) {
        assert_relative_eq!(*got, *w, epsilon = 1e-8);
    }
}
