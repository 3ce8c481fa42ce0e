//! Growth-rate dichotomy for the variational equation over a converging parent, and the
//! exceptional-ε sweep.

use super::{positive_phi1, random_smooth, Lab};
use crate::error::{Error, Result};
use crate::flow::{FlowOptions, FlowTrajectory, ShrinkerFlow};
use crate::report::{linear_fit, ExperimentReport, Series};
use crate::spectral::SpectralDecomposition;
use rayon::prelude::*;

/// Spectral coefficients of a (transplanted) variational solution at its recorded times.
pub struct CoeffPath {
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl CoeffPath {
    pub fn from_traj(spec: &SpectralDecomposition, traj: &FlowTrajectory) -> CoeffPath {
        let coeffs = traj.slices.iter().map(|s| s.coeffs.clone().unwrap_or_else(|| spec.coeffs(&s.values))).collect();
        CoeffPath { times: traj.times.clone(), coeffs }
    }

    /// a·self + b·other on the shared time grid (the variational equation is linear).
    pub fn combine(&self, a: f64, other: &CoeffPath, b: f64) -> CoeffPath {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()).collect();
        CoeffPath { times: self.times.clone(), coeffs }
    }

    pub fn plus_at_end(&self) -> f64 {
        self.coeffs.last().map(|c| c[0]).unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DriftStats {
    /// Slope of log‖v‖ over the late window.
    pub exponent: f64,
    /// Integer times in the late window with |v₊| > κ‖v₋‖.
    pub recurrences: usize,
    /// max ‖v − Π_{φ₁}v‖/|Π_{φ₁}v| over the late window.
    pub projection_constant: f64,
}

pub fn drift_stats(path: &CoeffPath, window: (f64, f64), kappa: f64) -> DriftStats {
    let (mut ts, mut ls) = (vec![], vec![]);
    let mut recurrences = 0;
    let mut proj = 0.0f64;
    for (t, c) in path.times.iter().zip(&path.coeffs) {
        if *t < window.0 - 1e-9 || *t > window.1 + 1e-9 {
            continue;
        }
        let minus = c[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let norm = (minus * minus + c[0] * c[0]).sqrt();
        ts.push(*t);
        ls.push(norm.ln());
        proj = proj.max(minus / c[0].abs());
        if (t - t.round()).abs() < 1e-9 && c[0].abs() > kappa * minus {
            recurrences += 1;
        }
    }
    let (exponent, _, _) = linear_fit(&ts, &ls);
    DriftStats { exponent, recurrences, projection_constant: proj }
}

fn flow_path(flow: &ShrinkerFlow, parent: &FlowTrajectory, v0: &[f64], horizon: f64, opts: &FlowOptions) -> Result<CoeffPath> {
    let traj = flow.variational(parent, v0, (0.0, horizon), opts)?;
    Ok(CoeffPath::from_traj(flow.spec, &traj))
}

/// ε grid of `points` values on [−2|ε*|, 2|ε*|] with the point nearest ε* replaced by ε*.
pub fn eps_grid(eps_star: f64, points: usize) -> Vec<f64> {
    let emax = 2.0 * eps_star.abs();
    let mut g: Vec<f64> = (0..points).map(|i| -emax + 2.0 * emax * i as f64 / (points - 1) as f64).collect();
    let near = (0..points).min_by(|&a, &b| (g[a] - eps_star).abs().total_cmp(&(g[b] - eps_star).abs())).unwrap();
    g[near] = eps_star;
    g
}

pub fn drift_experiment(lab: &Lab) -> Result<ExperimentReport> {
    let dc = &lab.config.drift;
    let mut rep = ExperimentReport::new("drift", dc);
    let flow = lab.torus_flow()?;
    let spec = &lab.torus_spec;
    let parent = lab.stable_parent(&flow)?;
    if parent.t_end() < dc.horizon {
        return Err(Error::Precondition(format!("parent covers [0, {}] only", parent.t_end())));
    }
    let (l1, l2) = (spec.eigenvalues[0], spec.eigenvalues[1]);
    let c_gap = 0.5 * (l1 - l2);
    let threshold = l1 - c_gap;
    let window = (0.5 * dc.horizon, dc.horizon);
    rep.fit("growth_threshold", threshold, 0.0);
    let opts = lab.fixed(dc.dt);
    let third = dc.runs / 3;

    let mut rng = lab.rng(700);
    let mut data: Vec<Vec<f64>> = vec![vec![1.0; lab.torus.n()]];
    for _ in 0..third {
        let s = random_smooth(&mut rng, spec, dc.random_modes);
        data.push(s.iter().map(|x| 1.0 + 0.9 * x).collect());
    }
    let mut signed = 0;
    while signed < third {
        let s = random_smooth(&mut rng, spec, dc.random_modes);
        if s.iter().any(|x| *x < -0.1) && s.iter().any(|x| *x > 0.1) {
            data.push(s);
            signed += 1;
        }
    }
    data.push(positive_phi1(spec).iter().map(|x| -x).collect());
    let paths = data.par_iter().map(|v| flow_path(&flow, &parent, v, dc.horizon, &opts)).collect::<Result<Vec<_>>>()?;
    let w0 = &paths[0];
    let positive = &paths[1..=third];
    let signs = &paths[third + 1..=2 * third];
    let neg_phi = &paths[2 * third + 1];

    let mut rows = Series::new("drift_runs", &["class", "exponent", "recurrences", "projection_constant"]);
    let mut violations = 0;
    let mut classify = |class: f64, p: &CoeffPath, rows: &mut Series| -> DriftStats {
        let st = drift_stats(p, window, dc.kappa);
        let recur = st.recurrences >= dc.recurrences;
        if recur != (st.exponent >= threshold) {
            violations += 1;
        }
        rows.push(vec![class, st.exponent, st.recurrences as f64, st.projection_constant]);
        st
    };
    let pos: Vec<DriftStats> = positive.iter().map(|p| classify(0.0, p, &mut rows)).collect();
    let sgn: Vec<DriftStats> = signs.iter().map(|p| classify(1.0, p, &mut rows)).collect();
    let mut exceptional = vec![];
    let mut sweep_fail = vec![];
    for p in signs {
        let eps_star = -p.plus_at_end() / w0.plus_at_end();
        let e = p.combine(1.0, w0, eps_star);
        exceptional.push(classify(2.0, &e, &mut rows));
        let fails = eps_grid(eps_star, dc.eps_points)
            .iter()
            .filter(|&&eps| drift_stats(&p.combine(1.0, w0, eps), window, dc.kappa).recurrences < dc.recurrences)
            .count();
        sweep_fail.push(fails);
    }
    rep.series.push(rows);
    rep.check_le("dichotomy_violations", violations as f64, 0.0);
    let pos_ok = pos.iter().filter(|s| s.recurrences >= dc.recurrences && s.exponent >= threshold).count();
    rep.check_ge("positive_runs_recur", pos_ok as f64, pos.len() as f64);
    let pc = pos.iter().map(|s| s.projection_constant).fold(0.0, f64::max);
    rep.fit("projection_constant", pc, 0.0);
    rep.fit("projection_time", window.0, 0.0);
    rep.fit("signed_recurring", sgn.iter().filter(|s| s.recurrences >= dc.recurrences).count() as f64, 0.0);
    let exc_rate = exceptional.iter().map(|s| s.exponent).sum::<f64>() / exceptional.len().max(1) as f64;
    rep.fit("exceptional_exponent", exc_rate, exceptional.iter().map(|s| (s.exponent - exc_rate).abs()).fold(0.0, f64::max));
    rep.check("exceptional_runs_slow", exceptional.iter().all(|s| s.exponent < threshold && s.recurrences < dc.recurrences), exc_rate, "growth near λ₂, no cone recurrence");
    rep.check_le("exceptional_per_sweep", sweep_fail.iter().copied().max().unwrap_or(0) as f64, 1.0);
    let st = drift_stats(neg_phi, window, dc.kappa);
    rep.check_le("negative_phi1_rate", (st.exponent - l1).abs() / l1, 0.02);
    rep.check_ge("negative_phi1_recurs", st.recurrences as f64, dc.recurrences as f64);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_eps_star() {
        let g = eps_grid(0.3, 7);
        assert_eq!(g.len(), 7);
        assert!(g.contains(&0.3));
        assert!((g[0] + 0.6).abs() < 1e-15 && (g[6] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn stats_of_pure_exponentials() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let coeffs = times.iter().map(|t| vec![(2.0 * t).exp(), (0.5 * t).exp()]).collect();
        let p = CoeffPath { times, coeffs };
        let s = drift_stats(&p, (5.0, 10.0), 1.0);
        assert!((s.exponent - 2.0).abs() < 1e-3);
        assert_eq!(s.recurrences, 6);
        assert!(s.projection_constant < 1e-3);
    }
}
