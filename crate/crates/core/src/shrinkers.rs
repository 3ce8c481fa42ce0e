//! Shrinker solves: closed forms, the torus profile by shooting, Newton refinement.

use crate::error::{Error, Result};
use crate::geometry::{GraphFunction, Grid, ShrinkerGeometry, SurfaceKind, Topology};
use crate::spectral::{assemble_linearized_operator, eigendecompose};
use ode_solvers::{Dop853, System, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub initial_radius_guess: f64,
    pub tolerance: f64,
    pub max_bisections: usize,
    pub grid: usize,
    pub newton_tolerance: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { initial_radius_guess: 3.3, tolerance: 1e-12, max_bisections: 200, grid: 256, newton_tolerance: 1e-8 }
    }
}

impl ShootingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.initial_radius_guess > 0.0) {
            return Err(Error::Config("initial_radius_guess must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::Config("shooting tolerance must lie in (0, 1e-6]".into()));
        }
        Ok(())
    }
}

pub fn shrinker_residual(geo: &ShrinkerGeometry) -> GraphFunction {
    GraphFunction::new(geo.residual())
}

/// Arclength-parametrized profile ODE for rotational shrinkers, state (r, z, α).
struct ProfileOde {
    stop_on_crossing: bool,
    left_plane: bool,
}

impl System<f64, Vector3<f64>> for ProfileOde {
    fn system(&self, _s: f64, y: &Vector3<f64>, dy: &mut Vector3<f64>) {
        let (r, z, a) = (y[0], y[1], y[2]);
        let (sa, ca) = a.sin_cos();
        dy[0] = ca;
        dy[1] = sa;
        dy[2] = 0.5 * (r * sa - z * ca) - sa / r;
    }

    fn solout(&mut self, _s: f64, y: &Vector3<f64>, _dy: &Vector3<f64>) -> bool {
        if y[0] < 0.05 {
            return true;
        }
        if y[1] > 1e-6 {
            self.left_plane = true;
        }
        self.stop_on_crossing && self.left_plane && y[1] < 0.0
    }
}

fn integrate(y0: Vector3<f64>, s0: f64, s1: f64, dx: f64, tol: f64, stop: bool) -> Result<(Vec<f64>, Vec<Vector3<f64>>)> {
    let ode = ProfileOde { stop_on_crossing: stop, left_plane: false };
    let mut solver = Dop853::new(ode, s0, s1, dx, y0, tol, tol * 1e-2);
    solver.integrate().map_err(|e| Error::NoTorus(format!("profile integration failed: {e:?}")))?;
    Ok((solver.x_out().clone(), solver.y_out().clone()))
}

fn state_at(y0: Vector3<f64>, s0: f64, s1: f64, tol: f64) -> Result<Vector3<f64>> {
    if (s1 - s0).abs() < 1e-15 {
        return Ok(y0);
    }
    let (_, ys) = integrate(y0, s0, s1, s1 - s0, tol, false)?;
    ys.last().copied().ok_or_else(|| Error::NoTorus("empty integration".into()))
}

/// Shoots from (r0, 0) straight up and returns (arclength of the first return to z = 0,
/// state there). None when the profile runs into the axis or never returns.
fn first_return(r0: f64, tol: f64) -> Result<Option<(f64, Vector3<f64>)>> {
    let y0 = Vector3::new(r0, 0.0, PI / 2.0);
    let (xs, ys) = integrate(y0, 0.0, 30.0, 0.01, tol, true)?;
    let last = ys.last().copied();
    let k = match ys.iter().rposition(|y| y[1] >= 0.0) {
        Some(k) if k + 1 < ys.len() && ys[k + 1][1] < 0.0 => k,
        _ => return Ok(None),
    };
    if last.map(|y| y[0] < 0.05).unwrap_or(true) {
        return Ok(None);
    }
    // secant on z(s) = 0 from the bracketing dense output points
    let (mut sa, mut sb) = (xs[k], xs[k + 1]);
    let (mut za, mut zb) = (ys[k][1], ys[k + 1][1]);
    let base_s = xs[k];
    let base_y = ys[k];
    let mut best = (sb, ys[k + 1]);
    for _ in 0..60 {
        let s = sb - zb * (sb - sa) / (zb - za);
        let y = state_at(base_y, base_s, s, tol)?;
        best = (s, y);
        if y[1].abs() < 1e-15 || (s - sb).abs() < 1e-15 {
            break;
        }
        sa = sb;
        za = zb;
        sb = s;
        zb = y[1];
    }
    Ok(Some(best))
}

/// Mismatch of the return angle from the perpendicular crossing 3π/2.
fn shooting_defect(r0: f64, tol: f64) -> Result<Option<f64>> {
    Ok(first_return(r0, tol)?.map(|(_, y)| y[2] - 1.5 * PI))
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusSolve {
    pub r0: f64,
    pub half_length: f64,
    pub shooting_residual: f64,
    pub newton_steps: usize,
    pub residual: f64,
}

/// Computes the rotational torus shrinker profile and refines it on the grid.
pub fn solve_torus_profile(cfg: &ShootingConfig) -> Result<(ShrinkerGeometry, TorusSolve)> {
    cfg.validate()?;
    let guess = cfg.initial_radius_guess;
    // bracket scan around the guess; prefer the sign change nearest to it
    let lo = (guess * 0.75).max(std::f64::consts::SQRT_2 + 1e-3);
    let hi = guess * 1.3;
    let steps = 60;
    let samples: Vec<(f64, Option<f64>)> = (0..=steps)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / steps as f64;
            shooting_defect(r, cfg.tolerance).map(|d| (r, d))
        })
        .collect::<Result<_>>()?;
    let mut bracket: Option<(f64, f64, f64)> = None;
    for w in samples.windows(2) {
        if let ((ra, Some(da)), (rb, Some(db))) = (w[0], w[1]) {
            if da * db <= 0.0 && da.abs() < 1.0 && db.abs() < 1.0 {
                let mid = 0.5 * (ra + rb);
                if bracket.map(|(a, b, _)| (mid - guess).abs() < (0.5 * (a + b) - guess).abs()).unwrap_or(true) {
                    bracket = Some((ra, rb, da));
                }
            }
        }
    }
    let (mut a, mut b, mut da) = bracket.ok_or_else(|| Error::NoTorus(format!("no sign change in [{lo:.3}, {hi:.3}]")))?;
    for _ in 0..cfg.max_bisections {
        let m = 0.5 * (a + b);
        let dm = shooting_defect(m, cfg.tolerance)?.ok_or_else(|| Error::NoTorus("lost the return crossing".into()))?;
        if dm * da <= 0.0 {
            b = m;
        } else {
            a = m;
            da = dm;
        }
        if b - a < 1e-15 * b {
            break;
        }
    }
    let r0 = 0.5 * (a + b);
    let (half_length, end) = first_return(r0, cfg.tolerance)?.ok_or_else(|| Error::NoTorus("root lost".into()))?;
    let shooting_residual = end[2] - 1.5 * PI;

    let n = cfg.grid;
    let grid = Grid::new(n, SurfaceKind::Rotational(Topology::Torus))?;
    let ds = 2.0 * half_length / n as f64;
    let mut pos = vec![[0.0; 2]; n];
    let mut y = Vector3::new(r0, 0.0, PI / 2.0);
    pos[0] = [r0, 0.0];
    for j in 1..=n / 2 {
        y = state_at(y, (j - 1) as f64 * ds, j as f64 * ds, cfg.tolerance)?;
        pos[j] = [y[0], y[1]];
    }
    pos[n / 2][1] = 0.0;
    for j in 1..n / 2 {
        pos[n - j] = [pos[j][0], -pos[j][1]];
    }
    let geo = ShrinkerGeometry::from_positions(grid, pos)?;
    geo.check_embedded()?;
    let (geo, steps) = refine_shrinker_counted(&geo, cfg.newton_tolerance)?;
    let residual = geo.residual_norm();
    Ok((geo, TorusSolve { r0, half_length, shooting_residual, newton_steps: steps, residual }))
}

pub fn refine_shrinker(geo: &ShrinkerGeometry) -> Result<ShrinkerGeometry> {
    refine_shrinker_counted(geo, 1e-10).map(|(g, _)| g)
}

/// Newton on the residual as a normal graph: L δu = H − ⟨x,n⟩/2, solved on the
/// complement of eigenvalues with |λ| below 1e-6; symmetric data stays symmetric.
pub fn refine_shrinker_counted(geo: &ShrinkerGeometry, target: f64) -> Result<(ShrinkerGeometry, usize)> {
    let mut cur = geo.clone();
    let mut res = cur.residual_norm();
    if !res.is_finite() || res > 1.0 {
        return Err(Error::Refinement(format!("initial residual {res:.3e} too large for Newton")));
    }
    let mut steps = 0;
    let mut stalled = 0;
    while res > target {
        if steps >= 30 {
            return Err(Error::Refinement(format!("no convergence after {steps} steps, residual {res:.3e}")));
        }
        let op = assemble_linearized_operator(&cur);
        let spec = eigendecompose(&op, op.n())?;
        let r = cur.residual();
        let c = spec.coeffs(&r);
        let corr: Vec<f64> = c
            .iter()
            .zip(&spec.eigenvalues)
            .map(|(ci, l)| if l.abs() > 1e-6 { ci / l } else { 0.0 })
            .collect();
        let du = spec.synth(&corr);
        let mut pos: Vec<[f64; 2]> = cur
            .position
            .iter()
            .zip(&cur.normal)
            .zip(&du)
            .map(|((p, nr), d)| [p[0] + d * nr[0], p[1] + d * nr[1]])
            .collect();
        symmetrize(&cur, &mut pos);
        let next = ShrinkerGeometry::from_positions(cur.grid.clone(), pos)?;
        let new_res = next.residual_norm();
        steps += 1;
        if !(new_res < 2.0 * res) {
            return Err(Error::Refinement(format!("Newton step increased residual {res:.3e} -> {new_res:.3e}")));
        }
        if new_res > 0.5 * res {
            stalled += 1;
            if stalled >= 3 {
                // discretization floor reached
                if new_res <= target {
                    cur = next;
                    break;
                }
                return Err(Error::Refinement(format!("residual stalled at {new_res:.3e}")));
            }
        }
        cur = next;
        res = new_res;
    }
    Ok((cur, steps))
}

/// Enforces the reflection symmetry of tori (z ↦ −z) and sphere loops (r ↦ −r).
fn symmetrize(geo: &ShrinkerGeometry, pos: &mut [[f64; 2]]) {
    let g = &geo.grid;
    let old = pos.to_vec();
    match geo.kind {
        SurfaceKind::Rotational(Topology::Torus) => {
            for j in 0..pos.len() {
                let m = old[g.mirror(j)];
                pos[j] = [0.5 * (old[j][0] + m[0]), 0.5 * (old[j][1] - m[1])];
            }
        }
        SurfaceKind::Rotational(Topology::Sphere) => {
            for j in 0..pos.len() {
                let m = old[g.mirror(j)];
                pos[j] = [0.5 * (old[j][0] - m[0]), 0.5 * (old[j][1] + m[1])];
            }
        }
        SurfaceKind::PlaneCurve => {}
    }
}

/// z-reflection defect of a torus profile.
pub fn reflection_defect(geo: &ShrinkerGeometry) -> f64 {
    (0..geo.n())
        .map(|j| {
            let p = geo.position[j];
            let m = geo.position[geo.grid.mirror(j)];
            (p[0] - m[0]).abs().max((p[1] + m[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_circle, graph_surface};
    use std::f64::consts::SQRT_2;

    #[test]
    fn circle_newton_from_nearby_radius() {
        let base = build_circle(SQRT_2, 64).unwrap();
        let pos = graph_surface(&base, &vec![SQRT_2 * 0.01; 64]).unwrap();
        let g = ShrinkerGeometry::from_positions(base.grid.clone(), pos).unwrap();
        let (r, steps) = refine_shrinker_counted(&g, 1e-10).unwrap();
        assert!(steps <= 5 && r.residual_norm() <= 1e-10);
    }

    #[test]
    fn circle_newton_from_unit_circle() {
        let g = build_circle(1.0, 64).unwrap();
        let r = refine_shrinker(&g).unwrap();
        let rad = r.position[0][0].hypot(r.position[0][1]);
        assert!((rad - SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn fixed_point_is_returned_unchanged() {
        let g = build_circle(SQRT_2, 32).unwrap();
        let (r, steps) = refine_shrinker_counted(&g, 1e-10).unwrap();
        assert_eq!(steps, 0);
        assert_eq!(r.position, g.position);
    }

    #[test]
    fn exact_shrinkers_have_small_residual() {
        assert!(shrinker_residual(&build_circle(SQRT_2, 256).unwrap()).sup() <= 1e-10);
        let c1 = shrinker_residual(&build_circle(1.0, 64).unwrap());
        assert!(c1.values.iter().all(|r| (r - 0.5).abs() < 1e-12));
    }
}
