mod common;

use common::{circle, sup_diff, torus};
use shrinkdyn::flow::{conservation_diagnostics, FlowOptions, ShrinkerFlow, TruncationConfig};
use shrinkdyn::geometry::sup_norm;
use shrinkdyn::spectral::semigroup_apply;
use std::f64::consts::SQRT_2;

#[test]
fn torus_linear_dominance_is_quadratic() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let phi = spec.phi(0);
    let err = |h: f64| {
        let u0: Vec<f64> = phi.iter().map(|x| h * x).collect();
        let tr = f.rmcf(&u0, (0.0, 1.0), &FlowOptions::fixed(1e-3)).unwrap();
        let lin = semigroup_apply(&spec, 1.0, &u0).unwrap();
        spec.norm(&tr.last().iter().zip(&lin).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let (e1, e2) = (err(1e-4), err(5e-5));
    let ratio = e1 / e2;
    assert!(ratio > 3.6 && ratio < 4.4, "ratio {ratio}");
}

#[test]
fn torus_zero_graph_stays_put() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let tr = f.rmcf(&vec![0.0; 128], (0.0, 50.0), &FlowOptions::default()).unwrap();
    assert!(sup_norm(tr.last()) <= 1e-8);
}

#[test]
fn f_is_monotone_on_torus() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let u0: Vec<f64> = geo.params().iter().map(|t| 2e-3 * ((3.0 * t).cos() + 0.5 * (5.0 * t).sin())).collect();
    let dt = 2e-3;
    let opts = FlowOptions { diagnostics: true, ..FlowOptions::fixed(dt) };
    let tr = f.rmcf(&u0, (0.0, 1.0), &opts).unwrap();
    let rep = conservation_diagnostics(&tr, &geo, None).unwrap();
    assert!(rep.f_monotone);
    assert!(rep.max_defect <= 5.0 * dt * rep.max_rate.max(1e-14), "{} vs {}", rep.max_defect, rep.max_rate);
}

#[test]
fn truncated_regimes() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let phi = spec.phi(3);
    let small: Vec<f64> = phi.iter().map(|x| 1e-3 * x).collect();
    let tc = TruncationConfig::new(1e-2).unwrap();
    let o = FlowOptions::fixed(1e-3);
    let a = f.truncated(&small, (0.0, 0.1), &tc, &o).unwrap();
    let b = f.rmcf(&small, (0.0, 0.1), &o).unwrap();
    assert!(sup_diff(a.last(), b.last()) <= 1e-12);
    let big: Vec<f64> = phi.iter().map(|x| 3.5e-2 * x).collect();
    let c = f.truncated(&big, (0.0, 0.1), &tc, &FlowOptions::default()).unwrap();
    let lin = semigroup_apply(&spec, 0.1, &big).unwrap();
    assert!(sup_diff(c.last(), &lin) <= 1e-12);
}

#[test]
fn moving_circle_parent_two_radii() {
    let (geo, spec) = circle(32);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let (a, b) = (0.02, -0.01);
    let o = FlowOptions::fixed(1e-4);
    let parent = f.rmcf(&vec![a; 32], (0.0, 1.0), &o).unwrap();
    let child = f.over_parent(&parent, &vec![b; 32], (0.0, 1.0), &o).unwrap();
    let r = |r0: f64| (2.0 + (r0 * r0 - 2.0) * 1f64.exp()).sqrt();
    let expect = r(SQRT_2 + a + b) - r(SQRT_2 + a);
    assert!((child.last()[7] - expect).abs() < 1e-6, "{} vs {}", child.last()[7], expect);
}

#[test]
fn variational_over_shrinker_is_eigenmode() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let parent = f.rmcf(&vec![0.0; 128], (0.0, 1.0), &FlowOptions::fixed(1e-2)).unwrap();
    let phi = spec.phi(0);
    let v = f.variational(&parent, &phi, (0.0, 1.0), &FlowOptions::fixed(1e-2)).unwrap();
    let lam = spec.eigenvalues[0];
    let expect: Vec<f64> = phi.iter().map(|x| x * lam.exp()).collect();
    let rel = sup_diff(v.last(), &expect) / sup_norm(&expect);
    assert!(rel < 1e-8, "rel {rel}");
}

#[test]
fn jacobi_field_property() {
    let (geo, spec) = torus(128);
    let f = ShrinkerFlow::new(&geo, &spec).unwrap();
    let p0: Vec<f64> = spec.phi(6).iter().map(|x| 3e-3 * x).collect();
    let o = FlowOptions::fixed(5e-3);
    let parent = f.rmcf(&p0, (0.0, 1.0), &o).unwrap();
    let w: Vec<f64> = geo.params().iter().map(|t| 1.0 + 0.5 * (2.0 * t).cos()).collect();
    let vstar = f.variational(&parent, &w, (0.0, 1.0), &o).unwrap();
    let gap = |h: f64| {
        let v0: Vec<f64> = w.iter().map(|x| h * x).collect();
        let v = f.over_parent(&parent, &v0, (0.0, 1.0), &o).unwrap();
        let d: Vec<f64> = v.last().iter().zip(vstar.last()).map(|(a, b)| a / h - b).collect();
        spec.norm(&d)
    };
    let (g1, g2) = (gap(1e-3), gap(5e-4));
    assert!(g2 < g1 && g1 / g2 > 1.8, "{g1} {g2}");
}
