mod common;

use common::torus;
use shrinkdyn::flow::{FlowOptions, ShrinkerFlow, TruncationConfig};
use shrinkdyn::manifolds::*;
use shrinkdyn::spectral::{split, Rates, SplitMode};

fn setup() -> (shrinkdyn::ShrinkerGeometry, shrinkdyn::SpectralDecomposition) {
    torus(128)
}

#[test]
fn stable_orbit_through_stable_mode_decays() {
    let (geo, spec) = setup();
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let model = TruncatedModel::new(&f, 128, TruncationConfig::new(1e-2).unwrap());
    let sets = ModeSets::classify(&spec.eigenvalues, spec.zero_tol);
    let mut xi = vec![0.0; 128];
    xi[4] = 1e-3;
    let sol = lp_stable(&model, &sets, &xi, &LpConfig::default()).unwrap();
    assert!(sol.sweeps <= 20);
    let l5 = spec.eigenvalues[4];
    let n = sol.norms();
    for (t, x) in sol.times.iter().zip(&n) {
        assert!(*x <= 2.0 * n[0] * (l5 * t / 2.0).exp());
    }
    // invariance: the orbit from t = 1 is again on the chart
    let k1 = 100;
    let c1 = &sol.orbit[k1];
    let xi1: Vec<f64> = (0..128).map(|i| if sets.stable.contains(&i) { c1[i] } else { 0.0 }).collect();
    let again = lp_stable(&model, &sets, &xi1, &LpConfig::default()).unwrap();
    let d: f64 = sets.unstable.iter().map(|&i| (again.value[i] - c1[i]).powi(2)).sum::<f64>().sqrt();
    assert!(d <= 1e-5, "{d}");
}

#[test]
fn unstable_orbit_through_phi1() {
    let (geo, spec) = setup();
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let delta = 1e-2;
    let trunc = TruncationConfig::new(delta).unwrap();
    let model = TruncatedModel::new(&f, 128, trunc);
    let two = split(&spec, SplitMode::TwoWay, None).unwrap();
    let sets = ModeSets::from_two_way(&two);
    let rates = two.rates.unwrap();
    let d = 1e-3;
    let mut xi = vec![0.0; 128];
    xi[0] = d;
    let sol = lp_unstable(&model, &sets, &xi, &LpConfig::default()).unwrap();
    let n = sol.norms();
    let n0 = n[sol.zero_index];
    for (t, x) in sol.times.iter().zip(&n) {
        assert!(*x <= 2.0 * n0 * (rates.beta * t).exp() + 1e-300);
    }
    // forward continuation grows at rate ≥ β
    let u0 = spec.synth(sol.at_zero());
    let tr = f.truncated(&u0, (0.0, 0.5), &trunc, &FlowOptions::fixed(1e-2)).unwrap();
    let growth = (spec.norm(tr.last()) / spec.norm(&u0)).ln() / 0.5;
    assert!(growth >= rates.beta, "{growth}");
    // positivity once inside the positivity cone
    let kpos = positivity_cone_constant(&spec);
    for c in &sol.orbit {
        let plus = c[0].abs();
        let minus: f64 = c[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if plus > kpos * minus && plus > 0.0 {
            assert!(spec.synth(c).iter().all(|x| *x > 0.0));
        }
    }
}

#[test]
fn four_charts_certify() {
    let (geo, spec) = setup();
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let trunc = TruncationConfig::new(1e-2).unwrap();
    let model = TruncatedModel::new(&f, 128, trunc);
    let sets = ModeSets::classify(&spec.eigenvalues, spec.zero_tol);
    assert!(sets.center.is_empty());
    let trivial = chart_build(&model, &sets, 1e-2, &ChartConfig::new(ChartKind::Center)).unwrap();
    assert!(trivial.trivial);
    for kind in [ChartKind::Stable, ChartKind::Unstable] {
        let ch = chart_build(&model, &sets, 1e-2, &ChartConfig::new(kind)).unwrap();
        assert_eq!(ch.samples.len(), 16);
        let c = &ch.certificates;
        assert!(ch.complete() && c.w_at_zero == 0.0 && c.max_residual <= 1e-8);
        assert!(c.tangency_slope >= 1.9 && c.lipschitz <= 0.2 && c.orbit_constant <= 5.0, "{kind:?} {c:?}");
    }
    // Xᶜ empty: center-unstable coincides with unstable
    let mut xi = vec![0.0; 128];
    xi[0] = 7e-4;
    xi[2] = -3e-4;
    let a = lp_unstable(&model, &sets, &xi, &LpConfig::default()).unwrap();
    let b = lp_center_unstable(&model, &sets, &xi, &LpConfig::default()).unwrap();
    let diff = a.value.iter().zip(&b.value).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-12);
}

#[test]
fn synthetic_center_chart() {
    let (geo, spec) = setup();
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let delta = 1e-2;
    let model = TruncatedModel::new(&f, 128, TruncationConfig::new(delta).unwrap()).with_eigenvalue(2, 0.0);
    let sets = ModeSets::classify(&model.lambda, spec.zero_tol);
    assert_eq!(sets.center, vec![2]);
    let cfg = LpConfig { horizon: 25.0, ..Default::default() };
    let zero = lp_center(&model, &sets, &vec![0.0; 128], &cfg).unwrap();
    assert!(zero.value.iter().all(|x| *x == 0.0));
    let mut xi = vec![0.0; 128];
    xi[2] = 1e-3;
    let sol = lp_center(&model, &sets, &xi, &cfg).unwrap();
    assert!(sol.norms().iter().all(|n| *n < delta));
    assert!(sol.ratios.iter().all(|r| *r <= 0.5));
}

#[test]
fn center_unstable_attracts() {
    let (geo, spec) = setup();
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let model = TruncatedModel::new(&f, 128, TruncationConfig::new(1e-2).unwrap());
    let sets = ModeSets::classify(&spec.eigenvalues, spec.zero_tol);
    let _ = Rates::defaults(&spec).unwrap();
    let starts: Vec<Vec<f64>> = (0..3)
        .map(|s| {
            let mut c = vec![0.0; 128];
            c[0] = 1e-6 * (s as f64 + 1.0);
            c[3] = 1e-3;
            c[4 + s] = -5e-4;
            c
        })
        .collect();
    let rep = cu_attraction(&model, &sets, &starts, &[0.0, 0.5, 1.0], &LpConfig::default()).unwrap();
    assert!(rep.max_constant <= 10.0, "{rep:?}");
}
