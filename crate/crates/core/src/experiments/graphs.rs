//! Transplantation and composition of normal graphs, and the gap between the graph flow
//! over a moving parent and its linearization.

use super::{random_smooth, Lab};
use crate::error::{Error, Result};
use crate::flow::ShrinkerFlow;
use crate::geometry::{graph_surface, l2_norm, GraphFunction, ShrinkerGeometry};
use crate::report::{linear_fit, ExperimentReport, Series};
use crate::spectral::norm_suite;

/// ḡ(x) = g(x + f(x)n(x)). Both graphs share the parameter grid, so the transplant is the
/// identity on node values; `f` only has to be a valid graph.
pub fn transplant(base: &ShrinkerGeometry, f: &GraphFunction, g: &GraphFunction) -> Result<GraphFunction> {
    if f.values.len() != base.n() || g.values.len() != base.n() {
        return Err(Error::Grid("transplant needs functions on the base grid".into()));
    }
    graph_surface(base, &f.values)?;
    Ok(GraphFunction::new(g.values.clone()))
}

fn realize(base: &ShrinkerGeometry, f: &[f64]) -> Result<ShrinkerGeometry> {
    ShrinkerGeometry::from_positions(base.grid.clone(), graph_surface(base, f)?)
}

/// (‖ḡ‖ on Σ, ‖g‖ on the graph of f), Gaussian L² norms.
pub fn transplant_norms(base: &ShrinkerGeometry, f: &GraphFunction, g: &GraphFunction) -> Result<(f64, f64)> {
    let bar = transplant(base, f, g)?;
    let over = realize(base, &f.values)?;
    Ok((l2_norm(&bar.values, base), l2_norm(&g.values, &over)))
}

/// The surface {y + g(y)n_f(y)} over the graph of f, written as a graph v over Σ by
/// intersecting each normal line of Σ with it (Newton in the curve parameter).
pub fn compose_graphs(base: &ShrinkerGeometry, f: &GraphFunction, g: &GraphFunction) -> Result<GraphFunction> {
    let over = realize(base, &f.values)?;
    let n = base.n();
    let qx: Vec<f64> = (0..n).map(|j| over.position[j][0] + g.values[j] * over.normal[j][0]).collect();
    let qy: Vec<f64> = (0..n).map(|j| over.position[j][1] + g.values[j] * over.normal[j][1]).collect();
    let basis = &base.grid.basis;
    let h = basis.step();
    let radius = base.tubular_radius();
    let mut v = vec![0.0; n];
    for i in 0..n {
        let x = base.position[i];
        let (t, nr) = (base.tangent[i], base.normal[i]);
        let mut th = basis.node(i);
        let mut done = false;
        for _ in 0..50 {
            let p = [basis.interpolate(&qx, th, 0) - x[0], basis.interpolate(&qy, th, 0) - x[1]];
            let dp = [basis.interpolate(&qx, th, 1), basis.interpolate(&qy, th, 1)];
            let res = p[0] * t[0] + p[1] * t[1];
            let der = dp[0] * t[0] + dp[1] * t[1];
            if der.abs() < 1e-14 {
                break;
            }
            let step = res / der;
            th -= step;
            if step.abs() < 1e-13 {
                done = true;
                break;
            }
        }
        if !done || (th - basis.node(i)).abs() > 8.0 * h {
            return Err(Error::Composition(format!("normal line at node {i} does not meet the composed graph nearby")));
        }
        let p = [basis.interpolate(&qx, th, 0) - x[0], basis.interpolate(&qy, th, 0) - x[1]];
        v[i] = p[0] * nr[0] + p[1] * nr[1];
        if v[i].abs() > radius {
            return Err(Error::Composition(format!("composed graph leaves the tubular neighborhood at node {i}")));
        }
    }
    Ok(GraphFunction::new(v))
}

/// Transplant identities, norm distortion and the composition estimate on the torus.
pub fn transplant_experiment(lab: &Lab) -> Result<ExperimentReport> {
    let gc = &lab.config.gap;
    let mut rep = ExperimentReport::new("transplant", gc);
    let base = &lab.torus;
    let mut rng = lab.rng(300);
    let fshape = random_smooth(&mut rng, &lab.torus_spec, 8);
    let gshape = random_smooth(&mut rng, &lab.torus_spec, 8);
    let g = GraphFunction::new(gshape.iter().map(|x| gc.compose_g * x).collect());
    let zero = GraphFunction::new(vec![0.0; base.n()]);
    let id = transplant(base, &zero, &g)?;
    rep.check_le("zero_graph_identity", id.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max), 0.0);
    let f0 = GraphFunction::new(fshape.iter().map(|x| gc.compose_sizes[0] * x).collect());
    let back = transplant(base, &GraphFunction::new(f0.values.iter().map(|x| -x).collect()), &transplant(base, &f0, &g)?)?;
    rep.check_le("inverse_transplant", back.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max), 1e-12);
    let vz = compose_graphs(base, &f0, &zero)?;
    rep.check_le("compose_with_zero", vz.values.iter().zip(&f0.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max), 1e-12);

    // concentric circles: v = f + g exactly
    let c = &lab.circle;
    let cv = compose_graphs(c, &GraphFunction::new(vec![0.05; c.n()]), &GraphFunction::new(vec![-0.02; c.n()]))?;
    rep.check_le("circle_constants_add", cv.values.iter().map(|x| (x - 0.03).abs()).fold(0.0, f64::max), 1e-12);

    let mut s = Series::new("composition_sweep", &["f_c4", "relative_error", "norm_distortion"]);
    for &size in &gc.compose_sizes {
        let f = GraphFunction::new(fshape.iter().map(|x| size * x).collect());
        let v = compose_graphs(base, &f, &g)?;
        let bar = transplant(base, &f, &g)?;
        let err: Vec<f64> = (0..base.n()).map(|j| v.values[j] - f.values[j] - bar.values[j]).collect();
        let rel = l2_norm(&err, base) / l2_norm(&bar.values, base);
        let (nb, ng) = transplant_norms(base, &f, &g)?;
        let c4 = norm_suite(&f.values, base, 0.25).c4;
        s.push(vec![c4, rel, (nb / ng - 1.0).abs()]);
    }
    let lx: Vec<f64> = s.rows.iter().map(|r| r[0].ln()).collect();
    let (slope, _, res) = linear_fit(&lx, &s.rows.iter().map(|r| r[1].ln()).collect::<Vec<_>>());
    rep.fit("composition_slope", slope, res);
    rep.check("composition_error_decreases", s.rows.windows(2).all(|w| w[1][1] < w[0][1]), slope, "");
    rep.check("composition_slope_near_one", (0.8..=1.5).contains(&slope), slope, "log-log slope of ‖v − (f + ḡ)‖/‖ḡ‖ against ‖f‖_C4");
    let cdist = s.rows.iter().map(|r| r[2] / r[0]).fold(0.0, f64::max);
    rep.fit("norm_distortion_constant", cdist, 0.0);
    let (dslope, _, dres) = linear_fit(&lx, &s.rows.iter().map(|r| r[2].ln()).collect::<Vec<_>>());
    rep.fit("norm_distortion_slope", dslope, dres);
    rep.check_ge("norm_distortion_vanishes", dslope, 0.8);
    rep.series.push(s);
    Ok(rep)
}

/// ‖v(T) − v*(T)‖ over a parent flow for a set of initial sizes, with the log-log slope.
fn gap_sweep(flow: &ShrinkerFlow, parent: &crate::flow::FlowTrajectory, shape: &[f64], deltas: &[f64], t_end: f64, dt: f64, floor: f64) -> Result<Vec<(f64, f64, f64)>> {
    let opts = crate::flow::FlowOptions { noise_floor: floor, ..crate::flow::FlowOptions::fixed(dt) };
    let vstar = flow.variational(parent, shape, (0.0, t_end), &opts)?;
    let vs = vstar.last().to_vec();
    let mut out = vec![];
    for &d in deltas {
        let v0: Vec<f64> = shape.iter().map(|x| d * x).collect();
        let v = flow.over_parent(parent, &v0, (0.0, t_end), &opts)?;
        if v.exit.is_some() {
            continue;
        }
        let diff: Vec<f64> = v.last().iter().zip(&vs).map(|(a, b)| a - d * b).collect();
        out.push((d, flow.spec.norm(&diff), flow.spec.norm(v.last())));
    }
    Ok(out)
}

pub fn linearization_gap_experiment(lab: &Lab) -> Result<ExperimentReport> {
    let gc = &lab.config.gap;
    let mut rep = ExperimentReport::new("linearization_gap", gc);

    // circle: concentric parent and child against the closed forms
    let cf = lab.circle_flow()?;
    let c = &lab.circle;
    let r0 = lab.config.surface.circle_radius;
    let a = 1e-2;
    let parent = cf.rmcf(&vec![a; c.n()], (0.0, gc.t_end), &lab.fixed(gc.dt))?;
    let rows = gap_sweep(&cf, &parent, &vec![1.0; c.n()], &gc.circle_deltas, gc.t_end, gc.dt, lab.config.flow.noise_floor)?;
    let radius = |x: f64, t: f64| (2.0 + (x * x - 2.0) * t.exp()).sqrt();
    let t = gc.t_end;
    let rp = radius(r0 + a, t);
    let mut s = Series::new("gap_circle", &["delta", "gap", "closed_form_gap"]);
    for (d, gap, _) in &rows {
        let exact = radius(r0 + a + d, t) - rp - d * (r0 + a) * t.exp() / rp;
        s.push(vec![*d, *gap, exact.abs() * lab.circle_spec.norm(&vec![1.0; c.n()])]);
    }
    let lx: Vec<f64> = s.rows.iter().map(|r| r[0].ln()).collect();
    let (slope, _, res) = linear_fit(&lx, &s.rows.iter().map(|r| r[1].ln()).collect::<Vec<_>>());
    let (cslope, _, _) = linear_fit(&lx, &s.rows.iter().map(|r| r[2].ln()).collect::<Vec<_>>());
    rep.fit("circle_slope", slope, res);
    rep.fit("circle_closed_form_slope", cslope, 0.0);
    rep.check_ge("circle_slope", slope, gc.min_slope);
    rep.check_le("circle_slope_matches_closed_form", (slope - cslope).abs(), 0.05);
    let agree = s.rows.iter().map(|r| (r[1] - r[2]).abs() / r[2]).fold(0.0, f64::max);
    rep.check_le("circle_gap_matches_closed_form", agree, 0.05);
    rep.series.push(s);

    // torus: stable-chart parent, random initial shape
    let tf = lab.torus_flow()?;
    let parent = lab.stable_parent(&tf)?;
    let mut rng = lab.rng(301);
    let shape = random_smooth(&mut rng, &lab.torus_spec, 8);
    let rows = gap_sweep(&tf, &parent, &shape, &gc.deltas, gc.t_end, gc.dt, lab.config.flow.noise_floor)?;
    if rows.len() < gc.deltas.len() {
        rep.note(format!("{} of {} sizes left the tubular neighborhood and were dropped", gc.deltas.len() - rows.len(), gc.deltas.len()));
    }
    let mut s = Series::new("gap_torus", &["delta", "gap", "relative_gap"]);
    for (d, gap, vn) in &rows {
        s.push(vec![*d, *gap, gap / vn]);
    }
    let lx: Vec<f64> = s.rows.iter().map(|r| r[0].ln()).collect();
    let (slope, _, res) = linear_fit(&lx, &s.rows.iter().map(|r| r[1].ln()).collect::<Vec<_>>());
    rep.fit("torus_slope", slope, res);
    rep.check_ge("torus_slope", slope, gc.min_slope);
    rep.check("torus_relative_gap_vanishes", s.rows.windows(2).all(|w| w[1][2] < w[0][2]), s.rows.last().map(|r| r[2]).unwrap_or(f64::NAN), "‖v − v*‖/‖v‖ decreases with δ");
    let c_fit = s.rows.iter().map(|r| r[1] / (r[0] * r[0])).fold(0.0, f64::max);
    rep.fit("torus_gap_constant", c_fit, 0.0);
    rep.series.push(s);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_ellipse;

    #[test]
    fn compose_zero_and_circle() {
        let e = build_ellipse(1.6, 1.2, 64).unwrap();
        let f = GraphFunction::new(e.params().iter().map(|t| 0.02 * (2.0 * t).cos()).collect());
        let zero = GraphFunction::new(vec![0.0; 64]);
        let v = compose_graphs(&e, &f, &zero).unwrap();
        assert!(v.values.iter().zip(&f.values).all(|(a, b)| (a - b).abs() < 1e-12));
        let v = compose_graphs(&e, &zero, &f).unwrap();
        assert!(v.values.iter().zip(&f.values).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn composition_is_a_graph_of_the_composed_points() {
        let e = build_ellipse(1.6, 1.2, 64).unwrap();
        let f = GraphFunction::new(e.params().iter().map(|t| 0.03 * (3.0 * t).sin()).collect());
        let g = GraphFunction::new(e.params().iter().map(|t| 0.02 * (2.0 * t).cos()).collect());
        let v = compose_graphs(&e, &f, &g).unwrap();
        // the point x_i + v_i n_i lies on the composed curve: check the distance to a dense sample
        let over = realize(&e, &f.values).unwrap();
        let qx: Vec<f64> = (0..64).map(|j| over.position[j][0] + g.values[j] * over.normal[j][0]).collect();
        let qy: Vec<f64> = (0..64).map(|j| over.position[j][1] + g.values[j] * over.normal[j][1]).collect();
        let b = &e.grid.basis;
        for i in (0..64).step_by(7) {
            let p = [e.position[i][0] + v.values[i] * e.normal[i][0], e.position[i][1] + v.values[i] * e.normal[i][1]];
            let d = (0..4000)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / 4000.0;
                    (b.interpolate(&qx, th, 0) - p[0]).hypot(b.interpolate(&qy, th, 0) - p[1])
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d < 2e-3, "{d}");
        }
    }
}
