//! Shared fixtures for the criterion benches.

use shrinkdyn::geometry::build_circle;
use shrinkdyn::shrinkers::{solve_torus_profile, ShootingConfig};
use shrinkdyn::spectral::{assemble_linearized_operator, eigendecompose};
use shrinkdyn::{ShrinkerGeometry, SpectralDecomposition};

pub fn torus(n: usize) -> (ShrinkerGeometry, SpectralDecomposition) {
    let (geo, _) = solve_torus_profile(&ShootingConfig { grid: n, ..Default::default() }).expect("torus profile");
    let spec = eigendecompose(&assemble_linearized_operator(&geo), n).expect("torus spectrum");
    (geo, spec)
}

pub fn circle(n: usize) -> ShrinkerGeometry {
    build_circle(std::f64::consts::SQRT_2, n).expect("circle")
}

/// Smooth datum of sup norm `size` on the torus grid.
pub fn bump(spec: &SpectralDecomposition, size: f64) -> Vec<f64> {
    let u = spec.phi(0);
    let m = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    u.iter().map(|x| size * x / m).collect()
}
