//! End-to-end perturbation run on the torus: localization time, linearization gap and
//! cone entry, exit from the δ-ball, and the drop in F and entropy.

use super::drift::eps_grid;
use super::entropy::entropy;
use super::graphs::compose_graphs;
use super::{positive_phi1, random_smooth, Lab};
use crate::error::{Error, Result};
use crate::flow::{ExitReason, FlowOptions, FlowTrajectory, ShrinkerFlow};
use crate::geometry::{f_functional, GraphFunction};
use crate::report::{ExperimentReport, Series};
use crate::spectral::norm_suite;

fn plus_minus(c: &[f64]) -> (f64, f64) {
    (c[0], c[1..].iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// First parent time with ‖f(t)‖_{C⁴} ≤ bound.
pub fn localization_time(lab: &Lab, parent: &FlowTrajectory, bound: f64) -> Result<(f64, usize)> {
    parent
        .slices
        .iter()
        .enumerate()
        .find(|(_, s)| norm_suite(&s.values, &lab.torus, 0.25).c4 <= bound)
        .map(|(k, _)| (parent.times[k], k))
        .ok_or_else(|| Error::Precondition(format!("parent C4 norm stays above {bound}")))
}

struct Case<'a> {
    label: &'a str,
    v0: Vec<f64>,
    eta: f64,
}

struct Shared<'a> {
    flow: &'a ShrinkerFlow<'a>,
    parent: &'a FlowTrajectory,
    t_loc: f64,
    f_t: Vec<f64>,
    opts: FlowOptions,
    f_sigma: f64,
    lambda_sigma: f64,
}

fn run_case(lab: &Lab, sh: &Shared, case: &Case, rep: &mut ExperimentReport, series: &mut Series) -> Result<()> {
    let pc = &lab.config.pipeline;
    let spec = &lab.torus_spec;
    let delta = pc.delta;
    let l1 = spec.eigenvalues[0];
    let tag = case.label;
    // Steps 1 and 2: perturbed flow over the parent up to T, against η times the linearization
    let v0: Vec<f64> = case.v0.iter().map(|x| case.eta * x).collect();
    let child = sh.flow.over_parent(sh.parent, &v0, (0.0, sh.t_loc), &sh.opts)?;
    if child.exit.is_some() {
        return Err(Error::Grid(format!("{tag}: perturbed graph breaks down at {} before the localization time {} ({:?})", child.t_end(), sh.t_loc, child.exit)));
    }
    let lin = sh.flow.variational(sh.parent, &case.v0, (0.0, sh.t_loc), &sh.opts)?;
    let vt = child.last().to_vec();
    let diff: Vec<f64> = vt.iter().zip(lin.last()).map(|(a, b)| a - case.eta * b).collect();
    let gap = spec.norm(&diff) / (case.eta * spec.norm(lin.last()));
    rep.fit(&format!("{tag}_eta"), case.eta, 0.0);
    rep.check_le(&format!("{tag}_step2_linearization_gap"), gap, pc.gap_tol);
    let (p, m) = plus_minus(&spec.coeffs(&vt));
    rep.check_ge(&format!("{tag}_step2_cone_entry"), p.abs() / m, pc.kappa);

    // Step 3: compose over Σ and flow to the first crossing of ‖u‖ = δ
    let u_t = compose_graphs(&lab.torus, &GraphFunction::new(sh.f_t.clone()), &GraphFunction::new(vt))?;
    let opts = FlowOptions { stop_norm: Some(delta), ..lab.adaptive() };
    let traj = sh.flow.rmcf(&u_t.values, (sh.t_loc, sh.t_loc + pc.horizon), &opts)?;
    let exit = match traj.exit {
        Some(e) if e.reason == ExitReason::Threshold => e,
        Some(_) => return Err(Error::Grid(format!("{tag}: graph breaks down before reaching the δ-sphere"))),
        None => {
            rep.check(&format!("{tag}_step3_exit"), false, traj.t_end(), "no exit within the horizon");
            return Ok(());
        }
    };
    for (t, s) in traj.times.iter().zip(&traj.slices) {
        let (p, m) = plus_minus(s.coeffs.as_ref().unwrap());
        series.push(vec![case.eta, *t, (p * p + m * m).sqrt(), p.abs() / m]);
    }
    let u_exit = traj.last().to_vec();
    let c = spec.coeffs(&u_exit);
    let norm = spec.norm(&u_exit);
    let (p, m) = plus_minus(&c);
    rep.fit(&format!("{tag}_exit_time"), exit.time, 0.0);
    rep.fit(&format!("{tag}_exit_cone_ratio"), p.abs() / m, 0.0);
    let band = (pc.band[0] * delta, pc.band[1] * delta);
    rep.check(&format!("{tag}_step3_exit_band"), norm >= band.0 && norm <= band.1, norm / delta, "‖u(T')‖/δ in the band");
    rep.check_ge(&format!("{tag}_step3_exit_in_cone"), p.abs() / m, pc.kappa);

    // Step 4: F and entropy below the shrinker
    let surface = sh.flow.realize(&u_exit)?;
    let f_exit = f_functional(&surface);
    let bound = sh.f_sigma - l1 * delta * delta / 4.0;
    rep.fit(&format!("{tag}_f_drop_over_lambda1_delta2"), (sh.f_sigma - f_exit) / (l1 * delta * delta), 0.0);
    rep.check_lt(&format!("{tag}_step4_f_drop"), f_exit, bound);
    let ent = entropy(&surface, &lab.config.entropy)?;
    if let Some(w) = &ent.warning {
        rep.note(format!("{tag}: {w}"));
    }
    rep.fit(&format!("{tag}_entropy_drop"), sh.lambda_sigma - ent.value, 0.0);
    rep.check_lt(&format!("{tag}_step4_entropy"), ent.value, sh.lambda_sigma);
    Ok(())
}

pub fn global_genericity_pipeline(lab: &Lab) -> Result<ExperimentReport> {
    let pc = &lab.config.pipeline;
    let mut rep = ExperimentReport::new("pipeline", pc);
    rep.note("Step 4 compares against λ₁δ²/4, half the second-variation drop, to absorb norm-equivalence slack");
    let flow = lab.torus_flow()?;
    let spec = &lab.torus_spec;
    let parent = lab.stable_parent(&flow)?;
    let (t_loc, k_loc) = localization_time(lab, &parent, pc.delta / 10.0)?;
    rep.fit("localization_time", t_loc, 0.0);
    let opts = lab.fixed(lab.config.parent.dt);
    let ent_sigma = entropy(&lab.torus, &lab.config.entropy)?;
    let sh = Shared {
        flow: &flow,
        parent: &parent,
        t_loc,
        f_t: parent.slices[k_loc].values.clone(),
        opts: opts.clone(),
        f_sigma: f_functional(&lab.torus),
        lambda_sigma: ent_sigma.value,
    };
    rep.fit("entropy_sigma", sh.lambda_sigma, (sh.lambda_sigma - sh.f_sigma).abs());
    let mut series = Series::new("pipeline_exit", &["eta", "time", "norm", "cone_ratio"]);

    // control: the unperturbed parent converges without exit
    let zero = flow.over_parent(&parent, &vec![0.0; lab.torus.n()], (0.0, t_loc), &opts)?;
    let zero_sup = zero.slices.iter().map(|s| s.sup()).fold(0.0, f64::max);
    let late: Vec<f64> = parent.slices[k_loc..].iter().map(|s| spec.norm(&s.values)).collect();
    let decreasing = late.windows(2).all(|w| w[1] <= w[0]);
    let (n0, n1) = (late[0], *late.last().unwrap());
    rep.check(
        "control_converged_no_exit",
        zero_sup == 0.0 && decreasing && n0 < pc.delta,
        n1,
        &format!("v0 = 0 over [{t_loc}, {}]: sup {zero_sup:e}, parent norm {n0:e} -> {n1:e}", parent.t_end()),
    );
    // a plain restart from f(T) is not on the stable manifold to rounding, so its φ₁ part grows
    let ctrl = flow.rmcf(&sh.f_t, (t_loc, parent.t_end()), &FlowOptions { stop_norm: Some(pc.delta), ..lab.adaptive() })?;
    rep.fit("restart_norm_growth", spec.norm(ctrl.last()) / n1, 0.0);

    for &eta in &pc.eta {
        let positive = Case { label: "positive", v0: positive_phi1(spec), eta };
        run_case(lab, &sh, &positive, &mut rep, &mut series)?;

        // sign-changing datum made exceptional: no φ₁ content at T
        let mut rng = lab.rng(800);
        let psi = loop {
            let s = random_smooth(&mut rng, spec, lab.config.drift.random_modes);
            if s.iter().any(|x| *x < -0.1) && s.iter().any(|x| *x > 0.1) {
                break s;
            }
        };
        let w0 = vec![1.0; lab.torus.n()];
        let lin_psi = flow.variational(&parent, &psi, (0.0, t_loc), &opts)?;
        let lin_w = flow.variational(&parent, &w0, (0.0, t_loc), &opts)?;
        let a_psi = spec.coeffs(lin_psi.last())[0];
        let a_w = spec.coeffs(lin_w.last())[0];
        let eps_star = -a_psi / a_w;
        let exc: Vec<f64> = psi.iter().zip(&w0).map(|(p, w)| p + eps_star * w).collect();
        let end_of = |eps: f64| -> Vec<f64> {
            lin_psi.last().iter().zip(lin_w.last()).map(|(p, w)| p + (eps_star + eps) * w).collect()
        };
        let ratio = |v: &[f64]| {
            let (p, m) = plus_minus(&spec.coeffs(v));
            p.abs() / m
        };
        rep.check_lt("signed_exceptional_detected", ratio(&end_of(0.0)), pc.kappa);
        let grid = eps_grid(eps_star, lab.config.drift.eps_points);
        let shifted: Vec<f64> = grid.iter().map(|e| e - eps_star).collect();
        let fails = shifted.iter().filter(|&&e| ratio(&end_of(e)) <= pc.kappa).count();
        rep.check_le("signed_sweep_exceptional_count", fails as f64, 1.0);
        let eps = shifted
            .iter()
            .copied()
            .max_by(|a, b| ratio(&end_of(*a)).total_cmp(&ratio(&end_of(*b))))
            .unwrap();
        rep.fit("signed_augmentation_eps", eps, 0.0);
        let augmented = Case { label: "signed", v0: exc.iter().zip(&w0).map(|(x, w)| x + eps * w).collect(), eta };
        run_case(lab, &sh, &augmented, &mut rep, &mut series)?;
    }
    rep.series.push(series);
    Ok(rep)
}
