use shrinkdyn::shrinkers::{reflection_defect, solve_torus_profile, ShootingConfig};

#[test]
fn torus_profile_solves_and_refines() {
    let cfg = ShootingConfig { grid: 128, ..Default::default() };
    let t0 = std::time::Instant::now();
    let (geo, info) = solve_torus_profile(&cfg).unwrap();
    eprintln!("{info:?} in {:?}", t0.elapsed());
    assert!(info.residual <= 1e-8);
    assert!(reflection_defect(&geo) < 1e-12);
    let rmin = geo.position.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let rmax = geo.position.iter().map(|p| p[0]).fold(0.0, f64::max);
    assert!(rmin > 0.0 && rmin < 2f64.sqrt() && rmax > 2f64.sqrt());
}
