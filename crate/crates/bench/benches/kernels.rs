use criterion::{criterion_group, criterion_main, Criterion};
use shrinkdyn::config::Config;
use shrinkdyn::experiments::entropy::entropy;
use shrinkdyn::flow::{FlowOptions, ShrinkerFlow};
use shrinkdyn::geometry::f_functional;
use shrinkdyn::spectral::{assemble_linearized_operator, eigendecompose, WeakForm};
use shrinkdyn_bench::{bump, circle, torus};
use std::hint::black_box;

fn operators(c: &mut Criterion) {
    let (geo, spec) = torus(128);
    let wf = WeakForm::new(&geo, 0);
    let u = bump(&spec, 1e-3);
    c.bench_function("weak_form_apply_torus_128", |b| b.iter(|| wf.apply(black_box(&u))));
    let circ = circle(256);
    c.bench_function("eigendecompose_circle_256", |b| {
        b.iter(|| eigendecompose(&assemble_linearized_operator(black_box(&circ)), 256).unwrap())
    });
    c.bench_function("f_functional_torus_128", |b| b.iter(|| f_functional(black_box(&geo))));
}

fn flows(c: &mut Criterion) {
    let (geo, spec) = torus(128);
    let flow = ShrinkerFlow::new(&geo, &spec).unwrap();
    let u = bump(&spec, 1e-3);
    let opts = FlowOptions::fixed(1e-2);
    c.bench_function("rmcf_torus_unit_time", |b| b.iter(|| flow.rmcf(black_box(&u), (0.0, 1.0), &opts).unwrap()));
    let cfg = Config::defaults().entropy;
    c.bench_function("entropy_search_torus", |b| b.iter(|| entropy(black_box(&geo), &cfg).unwrap()));
}

fn shooting(c: &mut Criterion) {
    let mut g = c.benchmark_group("shooting");
    g.sample_size(10);
    g.bench_function("torus_profile_128", |b| b.iter(|| torus(128)));
    g.finish();
}

criterion_group!(benches, operators, flows, shooting);
criterion_main!(benches);
