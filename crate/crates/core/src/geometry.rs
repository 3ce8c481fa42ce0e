//! Discretized closed curves and rotational profiles, their geometric quantities,
//! normal graphs over them, and Gaussian-weighted integration.

use crate::error::{Error, Result};
use crate::fourier::{fejer_weights_over_sin, TrigBasis};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Profile loop in the open half-plane r > 0.
    Torus,
    /// Profile meeting the axis at both ends, stored as a reflection-symmetric doubled loop.
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceKind {
    PlaneCurve,
    Rotational(Topology),
}

impl SurfaceKind {
    /// Dimension n of the hypersurface.
    pub fn dim(&self) -> usize {
        match self {
            SurfaceKind::PlaneCurve => 1,
            SurfaceKind::Rotational(_) => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SurfaceKind::PlaneCurve => "plane_curve",
            SurfaceKind::Rotational(Topology::Torus) => "rotational_torus",
            SurfaceKind::Rotational(Topology::Sphere) => "rotational_sphere",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "plane_curve" => Some(SurfaceKind::PlaneCurve),
            "rotational_torus" => Some(SurfaceKind::Rotational(Topology::Torus)),
            "rotational_sphere" => Some(SurfaceKind::Rotational(Topology::Sphere)),
            _ => None,
        }
    }
}

/// Parameter grid with differentiation matrices and quadrature rules.
///
/// Integrals use a fine grid of 2N points for the stiffness term so that the
/// Nyquist mode of the coarse grid is integrated correctly.
#[derive(Debug)]
pub struct Grid {
    pub basis: TrigBasis,
    pub kind: SurfaceKind,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Coarse quadrature factor per node (multiplies the integrand density in theta).
    pub quad: Vec<f64>,
    /// Interpolation and first derivative from coarse nodes to fine points.
    pub fine_interp: DMatrix<f64>,
    pub fine_d1: DMatrix<f64>,
    pub fine_quad: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, kind: SurfaceKind) -> Result<Arc<Grid>> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Grid(format!("need an even grid with n >= 16, got {n}")));
        }
        let sphere = kind == SurfaceKind::Rotational(Topology::Sphere);
        if sphere && n % 4 != 0 {
            return Err(Error::Grid(format!("sphere grids need n divisible by 4, got {n}")));
        }
        let offset = if sphere { PI / n as f64 } else { 0.0 };
        let basis = TrigBasis::new(n, offset);
        let d1 = basis.diff_matrix(1);
        let d2 = basis.diff_matrix(2);
        let (fine_pts, quad, fine_quad) = if sphere {
            let fine: Vec<f64> = (0..2 * n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect();
            (fine, doubled_fejer(&basis.nodes(), n / 2), doubled_fejer(&fine_pts_sphere(n), n))
        } else {
            let fine: Vec<f64> = (0..2 * n).map(|i| PI * i as f64 / n as f64).collect();
            (fine, vec![basis.step(); n], vec![0.5 * basis.step(); 2 * n])
        };
        let fine_interp = basis.eval_matrix(&fine_pts, 0);
        let fine_d1 = basis.eval_matrix(&fine_pts, 1);
        Ok(Arc::new(Grid { basis, kind, d1, d2, quad, fine_interp, fine_d1, fine_quad }))
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    /// Reflection partner of node j for symmetric topologies.
    pub fn mirror(&self, j: usize) -> usize {
        let n = self.n();
        match self.kind {
            SurfaceKind::Rotational(Topology::Sphere) => n - 1 - j,
            _ => (n - j) % n,
        }
    }
}

fn fine_pts_sphere(n: usize) -> Vec<f64> {
    (0..2 * n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect()
}

/// Fejer weights on a doubled loop: each half carries half of the profile integral.
fn doubled_fejer(points: &[f64], m: usize) -> Vec<f64> {
    let w = fejer_weights_over_sin(m);
    points
        .iter()
        .enumerate()
        .map(|(j, &th)| {
            let i = if j < m { j } else { 2 * m - 1 - j };
            // fejer_weights_over_sin divides by sin(theta_i) > 0 on the first half
            let s_first = (PI * (i as f64 + 0.5) / m as f64).sin();
            0.5 * w[i] * s_first / th.sin().abs()
        })
        .collect()
}

/// A discretized closed hypersurface with cached geometric quantities.
///
/// Positions are (x, y) for plane curves and (r, z) profile coordinates for
/// rotational surfaces; loops are traversed counterclockwise.
#[derive(Clone, Debug)]
pub struct ShrinkerGeometry {
    pub kind: SurfaceKind,
    pub grid: Arc<Grid>,
    pub position: Vec<[f64; 2]>,
    pub tangent: Vec<[f64; 2]>,
    pub speed: Vec<f64>,
    pub normal: Vec<[f64; 2]>,
    pub mean_curvature: Vec<f64>,
    pub second_fundamental_sq: Vec<f64>,
    pub area_weights: Vec<f64>,
    pub gauss_weights: Vec<f64>,
    /// Support function ⟨x, n⟩.
    pub support: Vec<f64>,
}

impl ShrinkerGeometry {
    pub fn from_positions(grid: Arc<Grid>, position: Vec<[f64; 2]>) -> Result<Self> {
        let n = grid.n();
        if position.len() != n {
            return Err(Error::Grid(format!("{} positions for a grid of {n}", position.len())));
        }
        let kind = grid.kind;
        let xs = DVector::from_iterator(n, position.iter().map(|p| p[0]));
        let ys = DVector::from_iterator(n, position.iter().map(|p| p[1]));
        let x1 = &grid.d1 * &xs;
        let y1 = &grid.d1 * &ys;
        let x2 = &grid.d2 * &xs;
        let y2 = &grid.d2 * &ys;
        let mut geo = ShrinkerGeometry {
            kind,
            grid: grid.clone(),
            position,
            tangent: vec![[0.0; 2]; n],
            speed: vec![0.0; n],
            normal: vec![[0.0; 2]; n],
            mean_curvature: vec![0.0; n],
            second_fundamental_sq: vec![0.0; n],
            area_weights: vec![0.0; n],
            gauss_weights: vec![0.0; n],
            support: vec![0.0; n],
        };
        let mean_speed = x1.iter().zip(y1.iter()).map(|(a, b)| a.hypot(*b)).sum::<f64>() / n as f64;
        for j in 0..n {
            let s = x1[j].hypot(y1[j]);
            if !(s > 1e-10 * mean_speed) {
                return Err(Error::Degenerate(format!("vanishing tangent at node {j}")));
            }
            let t = [x1[j] / s, y1[j] / s];
            let nrm = [t[1], -t[0]];
            let k1 = (x1[j] * y2[j] - y1[j] * x2[j]) / (s * s * s);
            let p = geo.position[j];
            let (h, a2, area) = match kind {
                SurfaceKind::PlaneCurve => (k1, k1 * k1, grid.quad[j] * s),
                SurfaceKind::Rotational(top) => {
                    let r = p[0];
                    if top == Topology::Torus && r <= 0.0 {
                        return Err(Error::Degenerate(format!("profile reaches the axis at node {j}")));
                    }
                    let k2 = nrm[0] / r;
                    (k1 + k2, k1 * k1 + k2 * k2, grid.quad[j] * s * 2.0 * PI * r.abs())
                }
            };
            geo.tangent[j] = t;
            geo.speed[j] = s;
            geo.normal[j] = nrm;
            geo.mean_curvature[j] = h;
            geo.second_fundamental_sq[j] = a2;
            geo.area_weights[j] = area;
            geo.gauss_weights[j] = area * (-(p[0] * p[0] + p[1] * p[1]) / 4.0).exp();
            geo.support[j] = p[0] * nrm[0] + p[1] * nrm[1];
        }
        Ok(geo)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn params(&self) -> Vec<f64> {
        self.grid.basis.nodes()
    }

    /// Pointwise shrinker residual H − ⟨x,n⟩/2.
    pub fn residual(&self) -> Vec<f64> {
        self.mean_curvature.iter().zip(&self.support).map(|(h, e)| h - 0.5 * e).collect()
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Arclength derivative d/ds of node values.
    pub fn d_ds(&self, u: &[f64]) -> Vec<f64> {
        let du = &self.grid.d1 * DVector::from_column_slice(u);
        du.iter().zip(&self.speed).map(|(d, s)| d / s).collect()
    }

    /// Profile length (one copy of the profile for the doubled sphere loop).
    pub fn profile_length(&self) -> f64 {
        let h = self.grid.basis.step();
        let total: f64 = self.speed.iter().sum::<f64>() * h;
        match self.kind {
            SurfaceKind::Rotational(Topology::Sphere) => total / 2.0,
            _ => total,
        }
    }

    pub fn diameter(&self) -> f64 {
        let pts = self.ambient_extent_points();
        let mut d: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
            }
        }
        d
    }

    fn ambient_extent_points(&self) -> Vec<[f64; 3]> {
        match self.kind {
            SurfaceKind::PlaneCurve => self.position.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            SurfaceKind::Rotational(_) => self
                .position
                .iter()
                .flat_map(|p| [[p[0], 0.0, p[1]], [-p[0], 0.0, p[1]], [0.0, p[0], p[1]]])
                .collect(),
        }
    }

    /// Half the smaller of the focal distance and the closest approach of distant
    /// parts of the surface; for tori the distance to the axis also counts.
    pub fn tubular_radius(&self) -> f64 {
        let n = self.n();
        let mut kmax: f64 = 0.0;
        for j in 0..n {
            let k1 = self.mean_curvature[j]
                - match self.kind {
                    SurfaceKind::PlaneCurve => 0.0,
                    SurfaceKind::Rotational(_) => self.normal[j][0] / self.position[j][0],
                };
            kmax = kmax.max(k1.abs());
            if let SurfaceKind::Rotational(_) = self.kind {
                kmax = kmax.max((self.normal[j][0] / self.position[j][0]).abs());
            }
        }
        let mut bound = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
        let h = self.grid.basis.step();
        let mut arc = vec![0.0; n + 1];
        for j in 0..n {
            arc[j + 1] = arc[j] + self.speed[j] * h;
        }
        let total = arc[n];
        let sphere = self.kind == SurfaceKind::Rotational(Topology::Sphere);
        for i in 0..n {
            for j in (i + 1)..n {
                if sphere && j == self.grid.mirror(i) {
                    continue;
                }
                let sep = (arc[j] - arc[i]).abs();
                if sep.min(total - sep) < total / 4.0 {
                    continue;
                }
                let (a, b) = (self.position[i], self.position[j]);
                let d = (a[0] - b[0]).hypot(a[1] - b[1]);
                if sphere && a[0] * b[0] < 0.0 {
                    continue;
                }
                bound = bound.min(d);
            }
        }
        if self.kind == SurfaceKind::Rotational(Topology::Torus) {
            let rmin = self.position.iter().fold(f64::INFINITY, |m, p| m.min(p[0]));
            bound = bound.min(rmin);
        }
        0.5 * bound
    }

    /// Rejects self-intersecting profiles and curves.
    pub fn check_embedded(&self) -> Result<()> {
        let n = self.n();
        let seg = |i: usize| (self.position[i], self.position[(i + 1) % n]);
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_cross(a, b, c, d) {
                    return Err(Error::Degenerate(format!("self-intersection between segments {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("kind,N\n{},{}\nparam,c0,c1\n", self.kind.label(), self.n());
        for (t, p) in self.params().iter().zip(&self.position) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, p[0], p[1]));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |m: &str| Error::Config(format!("surface csv: {m}"));
        if lines.next().map(str::trim) != Some("kind,N") {
            return Err(bad("missing kind,N header"));
        }
        let meta = lines.next().ok_or_else(|| bad("missing kind row"))?;
        let mut parts = meta.split(',');
        let kind = parts.next().and_then(SurfaceKind::from_label).ok_or_else(|| bad("unknown kind"))?;
        let n: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad N"))?;
        lines.next();
        let mut pos = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(&format!("line {}: {e}", i + 4)))?;
            if v.len() != 3 {
                return Err(bad(&format!("line {}: expected 3 fields", i + 4)));
            }
            pos.push([v[1], v[2]]);
        }
        if pos.len() != n {
            return Err(bad("row count differs from N"));
        }
        ShrinkerGeometry::from_positions(Grid::new(n, kind)?, pos)
    }
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub fn build_circle(radius: f64, n: usize) -> Result<ShrinkerGeometry> {
    if !(radius > 0.0) {
        return Err(Error::Degenerate(format!("radius must be positive, got {radius}")));
    }
    let grid = Grid::new(n, SurfaceKind::PlaneCurve)?;
    let pos = grid.basis.nodes().iter().map(|t| [radius * t.cos(), radius * t.sin()]).collect();
    ShrinkerGeometry::from_positions(grid, pos)
}

pub fn build_ellipse(a: f64, b: f64, n: usize) -> Result<ShrinkerGeometry> {
    let grid = Grid::new(n, SurfaceKind::PlaneCurve)?;
    let pos = grid.basis.nodes().iter().map(|t| [a * t.cos(), b * t.sin()]).collect();
    ShrinkerGeometry::from_positions(grid, pos)
}

/// Round sphere as a rotational profile: the doubled loop r = R sin θ, z = −R cos θ.
pub fn build_sphere_profile(radius: f64, n: usize) -> Result<ShrinkerGeometry> {
    if !(radius > 0.0) {
        return Err(Error::Degenerate(format!("radius must be positive, got {radius}")));
    }
    let grid = Grid::new(n, SurfaceKind::Rotational(Topology::Sphere))?;
    let pos = grid.basis.nodes().iter().map(|t| [radius * t.sin(), -radius * t.cos()]).collect();
    let geo = ShrinkerGeometry::from_positions(grid, pos)?;
    check_axis_regular(&geo)?;
    Ok(geo)
}

/// A sphere-topology profile must be odd in r under the reflection and avoid the axis at nodes.
pub fn check_axis_regular(geo: &ShrinkerGeometry) -> Result<()> {
    let scale = geo.position.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    for j in 0..geo.n() {
        let p = geo.position[j];
        let q = geo.position[geo.grid.mirror(j)];
        if (p[0] + q[0]).abs() > 1e-9 * scale || (p[1] - q[1]).abs() > 1e-9 * scale {
            return Err(Error::Degenerate(format!("profile not reflection symmetric at node {j}")));
        }
        if p[0].abs() < 1e-12 * scale {
            return Err(Error::Degenerate(format!("node {j} lies on the axis")));
        }
    }
    Ok(())
}

pub fn gaussian_inner(u: &[f64], v: &[f64], geo: &ShrinkerGeometry) -> Result<f64> {
    if u.len() != geo.n() || v.len() != geo.n() {
        return Err(Error::Grid("function length differs from grid".into()));
    }
    Ok(u.iter().zip(v).zip(&geo.gauss_weights).map(|((a, b), w)| a * b * w).sum())
}

pub fn l2_norm(u: &[f64], geo: &ShrinkerGeometry) -> f64 {
    u.iter().zip(&geo.gauss_weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
}

pub fn f_functional(geo: &ShrinkerGeometry) -> f64 {
    geo.gauss_weights.iter().sum()
}

/// F with the (4π)^{−n/2} normalization common in the literature.
pub fn f_functional_normalized(geo: &ShrinkerGeometry) -> f64 {
    f_functional(geo) * (4.0 * PI).powf(-(geo.kind.dim() as f64) / 2.0)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphFunction {
    pub values: Vec<f64>,
    pub coeffs: Option<Vec<f64>>,
}

impl GraphFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GraphFunction { values, coeffs: None }
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn graph_surface(base: &ShrinkerGeometry, u: &[f64]) -> Result<Vec<[f64; 2]>> {
    graph_surface_within(base, u, base.tubular_radius())
}

pub fn graph_surface_within(base: &ShrinkerGeometry, u: &[f64], radius: f64) -> Result<Vec<[f64; 2]>> {
    if u.len() != base.n() {
        return Err(Error::Grid("graph function length differs from grid".into()));
    }
    let m = sup_norm(u);
    if !(m <= radius) {
        return Err(Error::Tubular(format!("sup |u| = {m:.4e} exceeds radius {radius:.4e}")));
    }
    Ok(base
        .position
        .iter()
        .zip(&base.normal)
        .zip(u)
        .map(|((p, nr), s)| [p[0] + s * nr[0], p[1] + s * nr[1]])
        .collect())
}

/// Geometry of the normal graph {x + u n} pulled back to base nodes.
#[derive(Clone, Debug)]
pub struct GraphQuantities {
    pub speed_w: Vec<f64>,
    pub area_ratio_nu: Vec<f64>,
    pub support_eta: Vec<f64>,
    pub mean_curvature_hu: Vec<f64>,
    pub normal_u: Vec<[f64; 2]>,
    pub surface: ShrinkerGeometry,
}

pub fn graph_quantities(base: &ShrinkerGeometry, u: &[f64]) -> Result<GraphQuantities> {
    let pos = graph_surface(base, u)?;
    graph_quantities_from(base, ShrinkerGeometry::from_positions(base.grid.clone(), pos)?)
}

fn graph_quantities_from(base: &ShrinkerGeometry, surf: ShrinkerGeometry) -> Result<GraphQuantities> {
    let n = base.n();
    let mut w = vec![0.0; n];
    let mut nu = vec![0.0; n];
    for j in 0..n {
        let c = base.normal[j][0] * surf.normal[j][0] + base.normal[j][1] * surf.normal[j][1];
        if !(c > 1e-3) {
            return Err(Error::Tubular(format!("graph normal turns over at node {j}")));
        }
        w[j] = 1.0 / c;
        nu[j] = surf.area_weights[j] / base.area_weights[j];
    }
    Ok(GraphQuantities {
        speed_w: w,
        area_ratio_nu: nu,
        support_eta: surf.support.clone(),
        mean_curvature_hu: surf.mean_curvature.clone(),
        normal_u: surf.normal.clone(),
        surface: surf,
    })
}

/// Normal speed of the graph under RMCF expressed as ∂_t u: −w_u (H_u − η_u/2).
/// `radius` bounds |u| (tubular check).
pub fn graph_velocity(base: &ShrinkerGeometry, u: &[f64], radius: f64) -> Result<Vec<f64>> {
    let pos = graph_surface_within(base, u, radius)?;
    let q = graph_quantities_from(base, ShrinkerGeometry::from_positions(base.grid.clone(), pos)?)?;
    Ok((0..base.n())
        .map(|j| -q.speed_w[j] * (q.mean_curvature_hu[j] - 0.5 * q.support_eta[j]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn circle_quantities_are_exact() {
        let c = build_circle(SQRT_2, 256).unwrap();
        for j in 0..256 {
            assert!((c.mean_curvature[j] - 1.0 / SQRT_2).abs() < 1e-10);
            assert!((c.support[j] - SQRT_2).abs() < 1e-12);
            let nn = c.normal[j][0].hypot(c.normal[j][1]);
            assert!((nn - 1.0).abs() < 1e-12);
        }
        assert!(c.residual_norm() < 1e-10);
        let c1 = build_circle(1.0, 256).unwrap();
        assert!((c1.residual_norm() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(build_circle(SQRT_2, 15), Err(Error::Grid(_))));
        assert!(matches!(build_circle(SQRT_2, 8), Err(Error::Grid(_))));
        assert!(build_circle(-1.0, 32).is_err());
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let e = build_ellipse(2.0, 1.0, 256).unwrap();
        assert!((e.mean_curvature[0] - 2.0).abs() < 1e-6);
        assert!((e.mean_curvature[64] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn sphere_profile_quantities() {
        let s = build_sphere_profile(2.0, 256).unwrap();
        for j in 0..256 {
            assert!((s.mean_curvature[j] - 1.0).abs() < 1e-10);
            assert!((s.second_fundamental_sq[j] - 0.5).abs() < 1e-10);
        }
        assert!(s.residual_norm() < 1e-10);
        let s1 = build_sphere_profile(1.0, 256).unwrap();
        assert!((s1.residual_norm() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn f_values_match_closed_forms() {
        let c = build_circle(SQRT_2, 256).unwrap();
        let exact = 2.0 * SQRT_2 * PI * (-0.5f64).exp();
        assert!((f_functional(&c) - exact).abs() < 1e-12);
        let s = build_sphere_profile(2.0, 256).unwrap();
        assert!((f_functional(&s) - 16.0 * PI * (-1.0f64).exp()).abs() < 1e-10);
        let ones = vec![1.0; 256];
        assert!((gaussian_inner(&ones, &ones, &c).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn sphere_area_uses_profile_once() {
        let s = build_sphere_profile(1.5, 64).unwrap();
        let area: f64 = s.area_weights.iter().sum();
        assert!((area - 4.0 * PI * 2.25).abs() < 1e-11);
    }

    #[test]
    fn constant_graph_over_circle() {
        let c = build_circle(SQRT_2, 128).unwrap();
        let u = vec![0.1; 128];
        let q = graph_quantities(&c, &u).unwrap();
        for j in 0..128 {
            assert!((q.area_ratio_nu[j] - (SQRT_2 + 0.1) / SQRT_2).abs() < 1e-12);
            assert!((q.speed_w[j] - 1.0).abs() < 1e-12);
            assert!((q.mean_curvature_hu[j] - 1.0 / (SQRT_2 + 0.1)).abs() < 1e-10);
        }
    }

    #[test]
    fn cos2_graph_matches_direct_parametrization() {
        let c = build_circle(SQRT_2, 128).unwrap();
        let th = c.params();
        let u: Vec<f64> = th.iter().map(|t| 0.05 * (2.0 * t).cos()).collect();
        let pos = graph_surface(&c, &u).unwrap();
        for (j, t) in th.iter().enumerate() {
            let r = SQRT_2 + 0.05 * (2.0 * t).cos();
            assert!((pos[j][0] - r * t.cos()).abs() < 1e-12);
            assert!((pos[j][1] - r * t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn tubular_violation_is_rejected() {
        let c = build_circle(SQRT_2, 64).unwrap();
        assert!((c.tubular_radius() - SQRT_2 / 2.0).abs() < 1e-9);
        assert!(matches!(graph_surface(&c, &vec![1.0; 64]), Err(Error::Tubular(_))));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let e = build_ellipse(1.3, 0.7, 32).unwrap();
        let back = ShrinkerGeometry::from_csv(&e.to_csv()).unwrap();
        assert_eq!(back.position, e.position);
    }

    #[test]
    fn self_intersection_detected() {
        let grid = Grid::new(32, SurfaceKind::PlaneCurve).unwrap();
        // figure eight
        let pos = grid.basis.nodes().iter().map(|t| [t.sin(), (2.0 * t).sin() / 2.0]).collect();
        let g = ShrinkerGeometry::from_positions(grid, pos).unwrap();
        assert!(g.check_embedded().is_err());
        assert!(build_circle(1.0, 32).unwrap().check_embedded().is_ok());
    }
}
