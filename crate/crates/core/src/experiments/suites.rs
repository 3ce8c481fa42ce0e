//! Spectrum, flow and invariant-manifold suites on the circle, sphere and torus.

use super::{random_smooth, Lab};
use crate::error::Result;
use crate::flow::{conservation_diagnostics, FlowOptions, ShrinkerFlow};
use crate::geometry::{build_circle, build_sphere_profile, f_functional, graph_surface, sup_norm, ShrinkerGeometry};
use crate::manifolds::*;
use crate::report::{ExperimentReport, Series};
use crate::shrinkers::{reflection_defect, solve_torus_profile, ShootingConfig};
use crate::spectral::{assemble_linearized_operator, azimuthal_spectrum, eigendecompose, split, SplitMode};

fn f_at(base: &ShrinkerGeometry, psi: &[f64], s: f64) -> Result<f64> {
    let u: Vec<f64> = psi.iter().map(|x| s * x).collect();
    Ok(f_functional(&ShrinkerGeometry::from_positions(base.grid.clone(), graph_surface(base, &u)?)?))
}

pub fn spectrum_suite(lab: &Lab) -> Result<ExperimentReport> {
    let sc = &lab.config.surface;
    let mut rep = ExperimentReport::new("spectrum", sc);
    let n = sc.n_spectrum;

    // circle of radius √2: λ = 1 − k²/2, multiplicity 2 for k ≥ 1
    let circle = build_circle(sc.circle_radius, n)?;
    let cs = eigendecompose(&assemble_linearized_operator(&circle), 21)?;
    let mut expect = vec![1.0];
    for k in 1..=10 {
        let l = 1.0 - (k * k) as f64 / 2.0;
        expect.extend([l, l]);
    }
    let err = cs.eigenvalues.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    rep.check_le("circle_eigenvalues", err, sc.eigen_tol);
    rep.check("circle_morse_index", cs.morse_index == 3, cs.morse_index as f64, "n + 2 = 3");
    rep.check("circle_phi1_positive", cs.phi1_positive(), 0.0, "");
    let mut s = Series::new("circle_spectrum", &["index", "computed", "closed_form"]);
    for (i, (a, b)) in cs.eigenvalues.iter().zip(&expect).enumerate() {
        s.push(vec![i as f64, *a, *b]);
    }
    rep.series.push(s);

    // sphere of radius 2: axisymmetric block 1 − l(l+1)/4, index over all blocks 4
    let sphere = build_sphere_profile(sc.sphere_radius, n)?;
    let az = azimuthal_spectrum(&sphere, 9)?;
    let r2 = sc.sphere_radius * sc.sphere_radius;
    let axis = &az.blocks[0].eigenvalues;
    let err = axis
        .iter()
        .enumerate()
        .map(|(l, v)| (v - (1.0 - (l * (l + 1)) as f64 / r2)).abs())
        .fold(0.0, f64::max);
    rep.check_le("sphere_axisymmetric_eigenvalues", err, sc.eigen_tol);
    rep.check("sphere_morse_index", az.morse_index == 4, az.morse_index as f64, "n + 2 = 4");

    // torus at the spectral resolution
    let (torus, solve) = solve_torus_profile(&ShootingConfig { grid: n, newton_tolerance: sc.residual_tol, ..Default::default() })?;
    rep.check_le("torus_residual", solve.residual, sc.residual_tol);
    rep.check_le("torus_reflection_defect", reflection_defect(&torus), 1e-10);
    rep.fit("torus_r0", solve.r0, solve.shooting_residual.abs());
    let ts = eigendecompose(&assemble_linearized_operator(&torus), 16)?;
    let mut crit: f64 = 0.0;
    let h = sc.criticality_step;
    let mut dirs: Vec<Vec<f64>> = (0..6).map(|i| ts.phi(i)).collect();
    dirs.push(vec![1.0; n]);
    for psi in &dirs {
        let d = (f_at(&torus, psi, h)? - f_at(&torus, psi, -h)?) / (2.0 * h);
        crit = crit.max(d.abs());
    }
    rep.check_le("torus_f_criticality", crit, sc.criticality_tol);
    let l1 = ts.eigenvalues[0];
    rep.check("torus_lambda1_above_one", l1 > 1.0, l1, "");
    let taz = azimuthal_spectrum(&torus, 16)?;
    rep.check("torus_morse_index_above_four", taz.morse_index > 4, taz.morse_index as f64, "");
    rep.fit("torus_lambda1", l1, ts.eigen_residual(&assemble_linearized_operator(&torus)));
    rep.fit("torus_morse_index", taz.morse_index as f64, 0.0);
    let mut s = Series::new("torus_spectrum", &["m", "index", "eigenvalue"]);
    for b in &taz.blocks {
        for (i, l) in b.eigenvalues.iter().enumerate().take(8) {
            s.push(vec![b.m as f64, i as f64, *l]);
        }
    }
    rep.series.push(s);
    Ok(rep)
}

pub fn flow_suite(lab: &Lab) -> Result<ExperimentReport> {
    let fc = &lab.config.flow;
    let mut rep = ExperimentReport::new("flow", fc);

    // concentric circles against r² = 2 + (r₀² − 2)eᵗ
    let c = build_circle(lab.config.surface.circle_radius, fc.ode_n)?;
    let cspec = eigendecompose(&assemble_linearized_operator(&c), c.n())?;
    let cf = ShrinkerFlow::new(&c, &cspec)?;
    let mut ode = Series::new("concentric_circle", &["t", "flow_radius", "ode_radius"]);
    let mut worst: f64 = 0.0;
    for a in [2e-2, -2e-2] {
        let tr = cf.rmcf(&vec![a; c.n()], (0.0, fc.horizon), &FlowOptions { record_every: 100, ..FlowOptions::fixed(fc.ode_dt) })?;
        let r0 = lab.config.surface.circle_radius;
        for (t, u) in tr.times.iter().zip(&tr.slices) {
            let r = (2.0 + ((r0 + a).powi(2) - 2.0) * t.exp()).sqrt();
            let e = u.values.iter().map(|v| (r0 + v - r).abs()).fold(0.0, f64::max);
            worst = worst.max(e);
            if a > 0.0 {
                ode.push(vec![*t, r0 + u.values[0], r]);
            }
        }
    }
    rep.check_le("concentric_circle_vs_ode", worst, fc.ode_tol);
    rep.series.push(ode);

    // the zero graph over each certified shrinker
    let sphere = build_sphere_profile(lab.config.surface.sphere_radius, lab.config.surface.circle_n)?;
    let sspec = eigendecompose(&assemble_linearized_operator(&sphere), sphere.n())?;
    let shrinkers: [(&str, &ShrinkerGeometry, &crate::spectral::SpectralDecomposition); 3] =
        [("circle", &lab.circle, &lab.circle_spec), ("sphere", &sphere, &sspec), ("torus", &lab.torus, &lab.torus_spec)];
    for (name, geo, spec) in shrinkers {
        let f = ShrinkerFlow::new(geo, spec)?;
        let tr = f.rmcf(&vec![0.0; geo.n()], (0.0, fc.zero_horizon), &lab.adaptive())?;
        let m = tr.slices.iter().map(|s| sup_norm(&s.values)).fold(0.0, f64::max);
        rep.check_le(&format!("{name}_zero_graph"), m, fc.zero_tol);
    }

    // Huisken monotonicity along random trajectories
    let f = lab.torus_flow()?;
    let dt = fc.monotone_dt;
    let opts = FlowOptions { diagnostics: true, ..lab.fixed(dt) };
    let mut mono = Series::new("f_monotone", &["trajectory", "max_defect", "max_rate", "monotone"]);
    let mut all_mono = true;
    let mut worst_ratio: f64 = 0.0;
    for k in 0..fc.trajectories {
        let mut rng = lab.rng(100 + k as u64);
        let u0: Vec<f64> = random_smooth(&mut rng, &lab.torus_spec, 12).iter().map(|x| fc.amplitude * x).collect();
        let tr = f.rmcf(&u0, (0.0, fc.horizon), &opts)?;
        let c = conservation_diagnostics(&tr, &lab.torus, None)?;
        all_mono &= c.f_monotone;
        worst_ratio = worst_ratio.max(c.max_defect / (dt * c.max_rate.max(1e-300)));
        mono.push(vec![k as f64, c.max_defect, c.max_rate, if c.f_monotone { 1.0 } else { 0.0 }]);
    }
    rep.check("f_non_increasing", all_mono, fc.trajectories as f64, "all random trajectories");
    rep.check_le("f_defect_over_dt_rate", worst_ratio, 5.0);
    rep.fit("f_defect_constant", worst_ratio, 0.0);
    rep.series.push(mono);
    Ok(rep)
}

pub fn manifold_suite(lab: &Lab) -> Result<ExperimentReport> {
    let mc = &lab.config.manifolds;
    let mut rep = ExperimentReport::new("manifolds", mc);
    let f = lab.torus_flow()?;
    let trunc = lab.truncation()?;
    let delta = trunc.delta;
    let model = TruncatedModel::new(&f, mc.modes, trunc);
    let sets = ModeSets::classify(&model.lambda, lab.torus_spec.zero_tol);
    // center charts need a center direction: spectral surgery sets one eigenvalue to 0
    let surgery = TruncatedModel::new(&f, mc.modes, trunc).with_eigenvalue(mc.center_mode, 0.0);
    let ssets = ModeSets::classify(&surgery.lambda, lab.torus_spec.zero_tol);
    rep.note(format!(
        "torus center space has dimension {}; center and center-unstable charts use eigenvalue {} set to 0",
        sets.center.len(),
        mc.center_mode
    ));
    let mut table = Series::new("charts", &["kind", "samples", "residual", "slope", "lipschitz", "orbit_constant"]);
    let base_cfg = |kind: ChartKind, horizon: f64| ChartConfig {
        kind,
        radii: mc.radii.clone(),
        directions: mc.directions,
        sample_modes: mc.sample_modes,
        seed: lab.config.run.seed,
        lp: crate::manifolds::LpConfig { horizon, ..lab.lp_config() },
    };
    let want = mc.radii.len() * mc.directions;
    let jobs: [(ChartKind, bool); 4] =
        [(ChartKind::Stable, false), (ChartKind::Unstable, false), (ChartKind::Center, true), (ChartKind::CenterUnstable, true)];
    for (i, (kind, synthetic)) in jobs.into_iter().enumerate() {
        let horizon = if synthetic { mc.center_horizon } else { mc.horizon };
        let chart = if synthetic {
            chart_build(&surgery, &ssets, delta, &base_cfg(kind, horizon))?
        } else {
            chart_build(&model, &sets, delta, &base_cfg(kind, horizon))?
        };
        let c = &chart.certificates;
        let name = kind.label();
        rep.check(&format!("{name}_complete"), chart.complete() && chart.samples.len() == want, chart.samples.len() as f64, &chart.failures.join("; "));
        rep.check_le(&format!("{name}_residual"), c.max_residual, mc.residual_max);
        rep.check_ge(&format!("{name}_tangency_slope"), c.tangency_slope, mc.slope_min);
        rep.check_le(&format!("{name}_lipschitz"), c.lipschitz, mc.lipschitz_max);
        rep.check_le(&format!("{name}_w_at_zero"), c.w_at_zero, 0.0);
        rep.fit(&format!("{name}_orbit_constant"), c.orbit_constant, 0.0);
        rep.fit(&format!("{name}_reference_rate"), c.reference_rate, 0.0);
        table.push(vec![i as f64, chart.samples.len() as f64, c.max_residual, c.tangency_slope, c.lipschitz, c.orbit_constant]);
        if kind == ChartKind::Stable {
            rep.check_le("stable_orbits_decay_exponentially", c.orbit_constant, 5.0);
        }
    }

    // unstable backward decay along the strong unstable direction
    let two = split(&lab.torus_spec, SplitMode::TwoWay, None)?;
    let strong = ModeSets::from_two_way(&two);
    let beta = two.rates.map(|r| r.beta).unwrap_or(0.0);
    let mut xi = vec![0.0; model.lambda.len()];
    xi[0] = mc.radii[0];
    let sol = lp_unstable(&model, &strong, &xi, &lab.lp_config())?;
    let norms = sol.norms();
    let n0 = norms[sol.zero_index];
    let backward = sol
        .times
        .iter()
        .zip(&norms)
        .filter(|(t, _)| **t < 0.0)
        .map(|(t, n)| n / (n0 * (beta * t).exp()))
        .fold(0.0, f64::max);
    rep.check_le("unstable_backward_decay_constant", backward, 2.0);
    rep.fit("unstable_backward_constant", backward, 0.0);
    let mut orbit = Series::new("unstable_orbit", &["t", "norm", "beta_bound"]);
    for (t, n) in sol.times.iter().zip(&norms) {
        orbit.push(vec![*t, *n, n0 * (beta * t).exp()]);
    }
    rep.series.push(orbit);

    // center-unstable attraction on the surgery model
    let starts: Vec<Vec<f64>> = (0..mc.attraction_starts)
        .map(|s| {
            let mut c = vec![0.0; surgery.lambda.len()];
            c[0] = 1e-6 * (s as f64 + 1.0);
            c[mc.center_mode] = 5e-4;
            let st = ssets.stable[0];
            c[st] = 1e-3;
            c[st + 1 + s] = -5e-4;
            c
        })
        .collect();
    let att = cu_attraction(&surgery, &ssets, &starts, &mc.attraction_checkpoints, &crate::manifolds::LpConfig { horizon: mc.center_horizon, ..lab.lp_config() })?;
    rep.check_le("center_unstable_attraction_constant", att.max_constant, mc.attraction_max);
    rep.fit("center_unstable_attraction_rate", att.rate, 0.0);
    rep.series.push(table);
    Ok(rep)
}

/// Spectrum of one surface, for the `spectrum` command with explicit surface flags.
/// Closed-form checks apply to the shrinking circle (radius √2) and sphere (radius 2).
pub fn surface_spectrum(config: &crate::config::Config, kind: &str, radius: Option<f64>, n: Option<usize>) -> Result<ExperimentReport> {
    let sc = &config.surface;
    let n = n.unwrap_or(sc.n_spectrum);
    let inputs = serde_json::json!({ "surface": kind, "radius": radius, "n": n, "eigen_tol": sc.eigen_tol });
    let mut rep = ExperimentReport::new("spectrum", &inputs);
    let mut s = Series::new(&format!("{kind}_spectrum"), &["m", "index", "eigenvalue"]);
    match kind {
        "circle" => {
            let r = radius.unwrap_or(sc.circle_radius);
            let geo = build_circle(r, n)?;
            let cs = eigendecompose(&assemble_linearized_operator(&geo), 21.min(n))?;
            for (i, l) in cs.eigenvalues.iter().enumerate() {
                s.push(vec![0.0, i as f64, *l]);
            }
            rep.fit("morse_index", cs.morse_index as f64, 0.0);
            if (r * r - 2.0).abs() < 1e-6 {
                let err = cs
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let k = ((i + 1) / 2) as f64;
                        (l - (1.0 - k * k / 2.0)).abs()
                    })
                    .fold(0.0, f64::max);
                rep.check_le("circle_eigenvalues", err, sc.eigen_tol.max(10.0 * (r * r - 2.0).abs()));
                rep.check("circle_morse_index", cs.morse_index == 3, cs.morse_index as f64, "n + 2 = 3");
            } else {
                rep.note(format!("radius {r} is not the shrinking circle; no closed-form comparison"));
            }
        }
        "sphere" => {
            let r = radius.unwrap_or(sc.sphere_radius);
            let geo = build_sphere_profile(r, n)?;
            let az = azimuthal_spectrum(&geo, 9)?;
            for b in &az.blocks {
                for (i, l) in b.eigenvalues.iter().enumerate() {
                    s.push(vec![b.m as f64, i as f64, *l]);
                }
            }
            rep.fit("morse_index", az.morse_index as f64, 0.0);
            if (r - 2.0).abs() < 1e-6 {
                let err = az.blocks[0]
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(l, v)| (v - (1.0 - (l * (l + 1)) as f64 / (r * r))).abs())
                    .fold(0.0, f64::max);
                rep.check_le("sphere_axisymmetric_eigenvalues", err, sc.eigen_tol);
                rep.check("sphere_morse_index", az.morse_index == 4, az.morse_index as f64, "n + 2 = 4");
            } else {
                rep.note(format!("radius {r} is not the shrinking sphere; no closed-form comparison"));
            }
        }
        "torus" => {
            if radius.is_some() {
                rep.note("the torus is determined by shooting; --radius is ignored");
            }
            let (torus, solve) = solve_torus_profile(&ShootingConfig { grid: n, newton_tolerance: sc.residual_tol, ..Default::default() })?;
            rep.check_le("torus_residual", solve.residual, sc.residual_tol);
            let taz = azimuthal_spectrum(&torus, 16)?;
            for b in &taz.blocks {
                for (i, l) in b.eigenvalues.iter().enumerate().take(8) {
                    s.push(vec![b.m as f64, i as f64, *l]);
                }
            }
            let l1 = taz.blocks[0].eigenvalues[0];
            rep.fit("torus_lambda1", l1, 0.0);
            rep.fit("morse_index", taz.morse_index as f64, 0.0);
            rep.check("torus_lambda1_above_one", l1 > 1.0, l1, "");
            rep.check("torus_morse_index_above_four", taz.morse_index > 4, taz.morse_index as f64, "");
        }
        other => return Err(crate::error::Error::Config(format!("unknown surface `{other}`; expected circle, sphere or torus"))),
    }
    rep.series.push(s);
    Ok(rep)
}
