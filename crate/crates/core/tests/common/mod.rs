#![allow(dead_code)]
use shrinkdyn::geometry::{build_circle, ShrinkerGeometry};
use shrinkdyn::shrinkers::{solve_torus_profile, ShootingConfig};
use shrinkdyn::spectral::{assemble_linearized_operator, eigendecompose, SpectralDecomposition};

pub fn torus(n: usize) -> (ShrinkerGeometry, SpectralDecomposition) {
    let cfg = ShootingConfig { grid: n, ..Default::default() };
    let (geo, _) = solve_torus_profile(&cfg).unwrap();
    let spec = eigendecompose(&assemble_linearized_operator(&geo), n).unwrap();
    (geo, spec)
}

pub fn circle(n: usize) -> (ShrinkerGeometry, SpectralDecomposition) {
    let geo = build_circle(std::f64::consts::SQRT_2, n).unwrap();
    let spec = eigendecompose(&assemble_linearized_operator(&geo), n).unwrap();
    (geo, spec)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
