//! Exit-time alignment of flows from vanishing perturbations and comparison of the
//! aligned limit with the strong unstable orbit of φ₁.

use super::{gaussian_vec, positive_phi1, Lab};
use crate::error::{Error, Result};
use crate::flow::{ExitReason, FlowOptions, FlowTrajectory};
use crate::manifolds::{lp_unstable, ModeSets, TruncatedModel};
use crate::report::{ExperimentReport, Series};
use crate::spectral::{split, SplitMode};

/// Samples of τ ↦ coefficients at t = T + τ, linear in time between recorded slices.
fn aligned(traj: &FlowTrajectory, t_exit: f64, taus: &[f64]) -> Vec<Vec<f64>> {
    taus.iter()
        .map(|tau| {
            let t = t_exit + tau;
            let k = traj.times.partition_point(|s| *s <= t).clamp(1, traj.len() - 1);
            let (t0, t1) = (traj.times[k - 1], traj.times[k]);
            let a = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let (c0, c1) = (traj.slices[k - 1].coeffs.as_ref().unwrap(), traj.slices[k].coeffs.as_ref().unwrap());
            c0.iter().zip(c1).map(|(x, y)| (1.0 - a) * x + a * y).collect()
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn ancient_limit_experiment(lab: &Lab) -> Result<ExperimentReport> {
    let ac = &lab.config.ancient;
    let mut rep = ExperimentReport::new("ancient", ac);
    if ac.sizes.len() < 3 || ac.sizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("need at least three decreasing sizes".into()));
    }
    let flow = lab.torus_flow()?;
    let spec = &lab.torus_spec;
    let l1 = spec.eigenvalues[0];
    let delta = ac.delta;
    let floor = lab.config.flow.noise_floor;
    let dt = 1e-3;

    let phi = positive_phi1(spec);
    let mut rng = lab.rng(900);
    let g = gaussian_vec(&mut rng, lab.config.cone.minus_modes);
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut mc = vec![0.0; spec.k()];
    for (i, x) in g.iter().enumerate() {
        mc[i + 1] = ac.minus_weight * x / gn;
    }
    let minus = spec.synth(&mc);
    let u0: Vec<f64> = phi.iter().zip(&minus).map(|(p, m)| p + m).collect();
    let a0 = spec.coeffs(&u0)[0].abs();

    // Below the noise floor the integrator is the exact linear semigroup. Each size is
    // flowed to the time its φ₁ coefficient reaches `level`, then all sizes continue on
    // step grids with the same phase so the aligned comparison does not see step offsets.
    let level = delta * (-l1 * (ac.window + 0.25)).exp();
    if ac.sizes[0] * a0 >= level {
        return Err(Error::Precondition(format!("size {} too large to align a window of {}", ac.sizes[0], ac.window)));
    }
    let taus: Vec<f64> = (0..=500).map(|i| -ac.window + ac.window * i as f64 / 500.0).collect();
    let mut exits = vec![];
    let mut samples = vec![];
    let mut norm_series = Series::new("ancient_aligned_norms", &["size", "tau", "norm"]);
    for &s in &ac.sizes {
        let start: Vec<f64> = u0.iter().map(|x| s * x).collect();
        let t_lin = (level / (s * a0)).ln() / l1;
        let leg1 = flow.rmcf(&start, (0.0, t_lin), &lab.fixed(dt))?;
        if leg1.last().iter().any(|x| x.abs() >= floor) {
            return Err(Error::Precondition("linear leg reached the noise floor".into()));
        }
        let span = (t_lin, t_lin + 3.0 * (delta / level).ln() / l1);
        let leg2 = flow.rmcf(leg1.last(), span, &FlowOptions { stop_norm: Some(delta), ..lab.fixed(dt) })?;
        let exit = match leg2.exit {
            Some(e) if e.reason == ExitReason::Threshold => e.time,
            _ => return Err(Error::Precondition(format!("size {s}: no exit through the δ-sphere"))),
        };
        let a = aligned(&leg2, exit, &taus);
        for (tau, c) in taus.iter().zip(&a).step_by(10) {
            norm_series.push(vec![s, *tau, c.iter().map(|x| x * x).sum::<f64>().sqrt()]);
        }
        exits.push(exit);
        samples.push(a);
    }
    rep.series.push(norm_series);
    let mut es = Series::new("ancient_exits", &["size", "exit_time"]);
    for (s, t) in ac.sizes.iter().zip(&exits) {
        es.push(vec![*s, *t]);
    }
    rep.series.push(es);
    if exits.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!("exit times not increasing: {exits:?}")));
    }
    rep.check("exit_times_increasing", true, exits[exits.len() - 1] - exits[0], "");
    for (k, w) in exits.windows(2).enumerate() {
        let model = (ac.sizes[k] / ac.sizes[k + 1]).ln() / l1;
        rep.fit(&format!("exit_gap_{k}_over_linear_model"), (w[1] - w[0]) / model, 0.0);
    }

    // Cauchy in size: sup distance between consecutive aligned trajectories, in node values
    let sup_dist = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
                spec.synth(&d).iter().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max)
    };
    let dists: Vec<f64> = samples.windows(2).map(|w| sup_dist(&w[0], &w[1])).collect();
    for (k, d) in dists.iter().enumerate() {
        rep.fit(&format!("cauchy_distance_{k}"), *d, 0.0);
    }
    let mut per_decade = f64::INFINITY;
    for k in 0..dists.len() - 1 {
        let decades = (ac.sizes[k + 1] / ac.sizes[k + 2]).log10();
        per_decade = per_decade.min((dists[k] / dists[k + 1]).powf(1.0 / decades));
    }
    rep.fit("cauchy_factor_per_decade", per_decade, 0.0);
    rep.check_ge("cauchy_decrease", per_decade, ac.cauchy_factor);

    let limit = samples.last().unwrap();
    let min_val = limit.iter().map(|c| spec.synth(c).into_iter().fold(f64::INFINITY, f64::min)).fold(f64::INFINITY, f64::min);
    rep.check("limit_positive", min_val > 0.0, min_val, "node values on the aligned window");

    // strong unstable orbit of φ₁: the chart orbit at the chart radius, continued forward
    // with the flow to the δ-sphere (the manifold is invariant), aligned at its crossing
    let model = TruncatedModel::new(&flow, lab.config.manifolds.modes, lab.truncation()?);
    let sets = ModeSets::from_two_way(&split(spec, SplitMode::TwoWay, None)?);
    let mut xi = vec![0.0; model.lambda.len()];
    let radius = lab.config.manifolds.radii[0];
    xi[0] = radius * spec.coeffs(&phi)[0].signum();
    let sol = lp_unstable(&model, &sets, &xi, &lab.lp_config())?;
    let mut times = sol.times[..=sol.zero_index].to_vec();
    let mut coeffs: Vec<Vec<f64>> = sol.orbit[..=sol.zero_index]
        .iter()
        .map(|c| {
            let mut full = vec![0.0; spec.k()];
            full[..c.len()].copy_from_slice(c);
            full
        })
        .collect();
    let span = (0.0, 3.0 * (delta / radius).ln() / l1);
    let fwd = flow.rmcf(&spec.synth(coeffs.last().unwrap()), span, &FlowOptions { stop_norm: Some(delta), ..lab.fixed(dt) })?;
    for (t, s) in fwd.times.iter().zip(&fwd.slices).skip(1) {
        times.push(*t);
        coeffs.push(s.coeffs.clone().unwrap());
    }
    let exit = fwd.exit;
    let traj = FlowTrajectory {
        times,
        slices: coeffs.into_iter().map(|c| crate::geometry::GraphFunction { values: vec![], coeffs: Some(c) }).collect(),
        diagnostics: vec![],
        realized: vec![],
        exit,
        steps: 0,
        base: crate::flow::BaseKind::Static,
    };
    let sol_t0 = traj.times[0];
    let t_cross = match traj.exit {
        Some(e) if e.reason == ExitReason::Threshold => e.time,
        _ => return Err(Error::Precondition("unstable orbit stays inside the δ-ball".into())),
    };
    if t_cross - ac.window < sol_t0 {
        return Err(Error::Precondition("unstable orbit shorter than the comparison window".into()));
    }
    let lp = aligned(&traj, t_cross, &taus);
    let lp_dist = limit.iter().zip(&lp).map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
    rep.fit("lp_crossing_time", t_cross, 0.0);
    rep.fit("lp_distance_over_delta", lp_dist / delta, 0.0);
    rep.check_le("lp_distance", lp_dist, ac.lp_tol * delta);
    Ok(rep)
}
