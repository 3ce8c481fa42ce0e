//! Cone invariance and sharpening under the truncated flow on the torus.

use super::{gaussian_vec, positive_phi1, Lab};
use crate::error::Result;
use crate::flow::{FlowOptions, ShrinkerFlow, TruncationConfig};
use crate::report::{linear_fit, ExperimentReport, Series};
use crate::spectral::{kappa_bar, split, ConeParams, SplitMode};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Coefficients at the integer times 0..=steps; each unit is its own integration so the
/// samples are exact step ends.
pub fn unit_orbit(flow: &ShrinkerFlow, u0: &[f64], steps: usize, trunc: &TruncationConfig, opts: &FlowOptions) -> Result<Vec<Vec<f64>>> {
    let mut u = u0.to_vec();
    let mut out = vec![flow.spec.coeffs(&u)];
    for n in 0..steps {
        let traj = flow.truncated(&u, (n as f64, n as f64 + 1.0), trunc, opts)?;
        u = traj.last().to_vec();
        out.push(traj.slices.last().and_then(|s| s.coeffs.clone()).unwrap_or_else(|| flow.spec.coeffs(&u)));
    }
    Ok(out)
}

/// ‖u₊‖/‖u₋‖ with u₊ the φ₁ coefficient.
fn ratio(c: &[f64]) -> f64 {
    c[0].abs() / c[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A point on ∂𝒦_κ with Gaussian norm `size`: random sign on φ₁, random direction in the
/// leading minus modes.
fn boundary_point(rng: &mut ChaCha8Rng, k: usize, minus_modes: usize, kappa: f64, size: f64) -> Vec<f64> {
    let g = gaussian_vec(rng, minus_modes + 1);
    let gn = g[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let minus = size / (1.0 + kappa * kappa).sqrt();
    let mut c = vec![0.0; k];
    c[0] = kappa * minus * g[0].signum();
    for i in 1..=minus_modes.min(k - 1) {
        c[i] = minus * g[i] / gn;
    }
    c
}

struct Trial {
    ratios: Vec<f64>,
    plus: Vec<f64>,
}

fn run_trial(flow: &ShrinkerFlow, c0: &[f64], base: Option<&[f64]>, steps: usize, trunc: &TruncationConfig, opts: &FlowOptions) -> Result<Trial> {
    let spec = flow.spec;
    match base {
        None => {
            let orbit = unit_orbit(flow, &spec.synth(c0), steps, trunc, opts)?;
            Ok(Trial { ratios: orbit.iter().map(|c| ratio(c)).collect(), plus: orbit.iter().map(|c| c[0].abs()).collect() })
        }
        Some(b) => {
            let o1 = unit_orbit(flow, &spec.synth(b), steps, trunc, opts)?;
            let c2: Vec<f64> = b.iter().zip(c0).map(|(x, y)| x + y).collect();
            let o2 = unit_orbit(flow, &spec.synth(&c2), steps, trunc, opts)?;
            let d: Vec<Vec<f64>> = o1.iter().zip(&o2).map(|(a, b)| b.iter().zip(a).map(|(x, y)| x - y).collect()).collect();
            Ok(Trial { ratios: d.iter().map(|c| ratio(c)).collect(), plus: d.iter().map(|c| c[0].abs()).collect() })
        }
    }
}

/// Sharpening failures, saturated growth rates and the smallest per-step rate.
fn assess(trials: &[Trial], kappa: f64, kbar: f64, factor: f64) -> (usize, Vec<f64>, f64) {
    let (mut fails, mut sat, mut min_rate) = (0, vec![], f64::INFINITY);
    for tr in trials {
        let mut ok = tr.ratios[0] >= kappa * (1.0 - 1e-9);
        for n in 0..tr.ratios.len() - 1 {
            let target = kbar.min(tr.ratios[n] * factor);
            ok &= tr.ratios[n + 1] > target;
            let rate = (tr.plus[n + 1] / tr.plus[n]).ln();
            min_rate = min_rate.min(rate);
            if tr.ratios[n] >= kbar {
                sat.push(rate);
            }
        }
        if !ok {
            fails += 1;
        }
    }
    (fails, sat, min_rate)
}

pub fn cone_invariance_experiment(lab: &Lab) -> Result<ExperimentReport> {
    let cc = &lab.config.cone;
    let mut rep = ExperimentReport::new("cone", cc);
    let flow = lab.torus_flow()?;
    let spec = &lab.torus_spec;
    let splitting = split(spec, SplitMode::TwoWay, None)?;
    let rates = splitting.rates.expect("two-way rates");
    let delta = lab.config.truncation.delta;
    let trunc = lab.truncation()?;
    let opts = lab.adaptive();
    let kbar = kappa_bar(&rates, delta, cc.c1);
    let (params, clamped) = ConeParams::new(cc.kappa, &rates, delta, cc.c1);
    if clamped {
        rep.note(format!("kappa {} exceeds kappa_bar {kbar}; clamped", cc.kappa));
    }
    let kappa = params.kappa;
    let factor = ((rates.beta - rates.gamma) / 2.0).exp();
    let l1 = spec.eigenvalues[0];
    rep.fit("kappa_bar", kbar, 0.0);
    rep.fit("sharpening_factor", factor, 0.0);
    rep.fit("gamma", rates.gamma, 0.0);
    rep.fit("beta", rates.beta, 0.0);
    let (over, was_clamped) = ConeParams::new(2.0 * kbar, &rates, delta, cc.c1);
    rep.check("kappa_clamped_to_bar", was_clamped && over.kappa == kbar, over.kappa, "κ > κ̄ requested");
    let k = spec.k();

    let mut rng = lab.rng(600);
    let starts: Vec<Vec<f64>> = (0..cc.trials).map(|_| boundary_point(&mut rng, k, cc.minus_modes, kappa, delta / 2.0)).collect();
    let trials = starts.par_iter().map(|c| run_trial(&flow, c, None, cc.steps, &trunc, &opts)).collect::<Result<Vec<_>>>()?;
    let (fails, sat, min_rate) = assess(&trials, kappa, kbar, factor);
    let mut s = Series::new("cone_ratios", &["trial", "step", "ratio", "plus_norm"]);
    for (i, tr) in trials.iter().enumerate() {
        for n in 0..tr.ratios.len() {
            s.push(vec![i as f64, n as f64, tr.ratios[n], tr.plus[n]]);
        }
    }
    rep.series.push(s);
    let inside = trials.iter().filter(|t| t.ratios[1] > kbar.min(kappa * factor)).count();
    rep.check_ge("first_step_inside", inside as f64, cc.trials as f64);
    rep.check_le("sharpening_failures", fails as f64, 0.0);
    let sat_dev = sat.iter().map(|r| (r - l1).abs() / l1).fold(0.0, f64::max);
    rep.check("saturated_steps_present", !sat.is_empty(), sat.len() as f64, "");
    rep.check_le("saturated_growth_vs_lambda1", sat_dev, cc.growth_tol);
    rep.fit("min_plus_rate", min_rate, 0.0);
    rep.fit("rate_defect_constant", ((rates.beta - min_rate) / delta).max(0.0), 0.0);
    rep.check_ge("plus_rate_above_beta", min_rate, rates.beta);

    // difference version
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cc.pairs)
        .map(|_| {
            let b = boundary_point(&mut rng, k, cc.minus_modes, 1.0, delta / 4.0);
            let w = boundary_point(&mut rng, k, cc.minus_modes, kappa, delta / 4.0);
            (w, b)
        })
        .collect();
    let dtrials = pairs.par_iter().map(|(w, b)| run_trial(&flow, w, Some(b), cc.steps, &trunc, &opts)).collect::<Result<Vec<_>>>()?;
    let (dfails, dsat, dmin) = assess(&dtrials, kappa, kbar, factor);
    rep.check_le("difference_sharpening_failures", dfails as f64, 0.0);
    rep.check_le("difference_saturated_growth", dsat.iter().map(|r| (r - l1).abs() / l1).fold(0.0, f64::max), cc.growth_tol);
    rep.fit("difference_min_rate", dmin, 0.0);

    // eigenmode
    let phi = positive_phi1(spec);
    let orbit = unit_orbit(&flow, &phi.iter().map(|x| 0.5 * delta * x).collect::<Vec<_>>(), cc.steps, &trunc, &opts)?;
    let n: Vec<f64> = (0..orbit.len()).map(|i| i as f64).collect();
    let (rate, _, res) = linear_fit(&n, &orbit.iter().map(|c| c[0].abs().ln()).collect::<Vec<_>>());
    rep.fit("eigenmode_rate", rate, res);
    rep.check_le("eigenmode_rate_vs_lambda1", (rate - l1).abs() / l1, cc.eigenmode_tol);
    rep.check("eigenmode_in_every_cone", orbit.iter().all(|c| ratio(c) > kbar), orbit.iter().map(|c| ratio(c)).fold(f64::INFINITY, f64::min), "");
    Ok(rep)
}
