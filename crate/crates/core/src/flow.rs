//! Graphical rescaled mean curvature flow over a shrinker or over a moving parent flow.
//!
//! All integrators are first-order exponential Euler in the spectral coordinates of the
//! base shrinker: c ← e^{λΔt} c + Δt φ₁(λΔt) q, where q holds the part of the forcing not
//! captured by the diagonal linear flow.

use crate::error::{Error, Result};
use crate::geometry::{f_functional, sup_norm, GraphFunction, ShrinkerGeometry, SurfaceKind};
use crate::spectral::{SpectralDecomposition, WeakForm};
use nalgebra::DVector;
use serde::Serialize;

/// C² cutoff: 1 on [0,1], 0 on [2,∞), quintic smoothstep between.
pub fn chi(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let s = x - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

pub fn chi_prime(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 || x >= 2.0 {
        0.0
    } else {
        let s = x - 1.0;
        -30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct TruncationConfig {
    pub delta: f64,
}

impl TruncationConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("truncation delta must be positive, got {delta}")));
        }
        Ok(TruncationConfig { delta })
    }

    /// χ(‖u‖/δ) with the Gaussian L² norm.
    pub fn factor(&self, norm: f64) -> f64 {
        chi(norm / self.delta)
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub enum StepControl {
    /// Δt = min(cap, (rel·‖u‖ + abs)/‖q‖); underflow below `min` is a stiffness error.
    Adaptive { cap: f64, rel: f64, abs: f64, min: f64 },
    Fixed(f64),
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { cap: 1e-2, rel: 1e-3, abs: 1e-9, min: 1e-7 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowOptions {
    pub step: StepControl,
    /// Below this sup norm the nonlinear remainder is dropped (it is under roundoff).
    pub noise_floor: f64,
    /// Stop at the first crossing of this Gaussian L² norm.
    pub stop_norm: Option<f64>,
    pub diagnostics: bool,
    pub record_every: usize,
    /// Fail with a positivity error when a node value turns nonpositive.
    pub require_positive: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            step: StepControl::default(),
            noise_floor: 1e-6,
            stop_norm: None,
            diagnostics: false,
            record_every: 1,
            require_positive: false,
        }
    }
}

impl FlowOptions {
    pub fn fixed(dt: f64) -> Self {
        FlowOptions { step: StepControl::Fixed(dt), ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        match self.step {
            StepControl::Fixed(dt) if !(dt > 0.0) => return Err(Error::Config(format!("time step {dt}"))),
            StepControl::Adaptive { cap, min, .. } if !(cap > 0.0 && min > 0.0 && min <= cap) => {
                return Err(Error::Config("adaptive step bounds".into()))
            }
            _ => {}
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SliceDiagnostics {
    pub time: f64,
    pub l2: f64,
    pub sup: f64,
    /// F of the realized surface, NaN when not computed.
    pub f_value: f64,
    /// ∫(H − ⟨x,n⟩/2)² e^{−|x|²/4} over the realized surface.
    pub dissipation: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum ExitReason {
    Threshold,
    Tubular,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ExitEvent {
    pub time: f64,
    pub reason: ExitReason,
    /// Index of the last slice inside the admissible region.
    pub last_valid: usize,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum BaseKind {
    Static,
    Moving,
    Linear,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub slices: Vec<GraphFunction>,
    pub diagnostics: Vec<SliceDiagnostics>,
    /// Realized surface positions per slice (only with diagnostics on).
    pub realized: Vec<Vec<[f64; 2]>>,
    pub exit: Option<ExitEvent>,
    pub steps: usize,
    pub base: BaseKind,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        &self.slices[self.slices.len() - 1].values
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Linear interpolation in time; clamps outside the recorded range.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|s| *s <= t);
        if k == 0 {
            return self.slices[0].values.clone();
        }
        if k >= self.times.len() {
            return self.last().to_vec();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let a = (t - t0) / (t1 - t0);
        let (u0, u1) = (&self.slices[k - 1].values, &self.slices[k].values);
        u0.iter().zip(u1).map(|(x, y)| (1.0 - a) * x + a * y).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.l2).collect()
    }
}

/// Kinematics of a moving base P(t) = Σ + f(t) n_Σ at one instant.
struct Motion {
    fdot: Vec<f64>,
    sigma_normal: Vec<[f64; 2]>,
    ndot: Vec<[f64; 2]>,
}

struct Evaluation {
    velocity: Vec<f64>,
    surface: Option<ShrinkerGeometry>,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Raw normal-graph velocity over `base` (unsubtracted), with the realized surface.
fn raw_velocity(base: &ShrinkerGeometry, u: &[f64], radius: f64, motion: Option<&Motion>) -> Result<Evaluation> {
    let pos = crate::geometry::graph_surface_within(base, u, radius)?;
    let x = ShrinkerGeometry::from_positions(base.grid.clone(), pos)?;
    let n = base.n();
    let mut vel = vec![0.0; n];
    for j in 0..n {
        let c = dot(base.normal[j], x.normal[j]);
        if !(c > 1e-3) {
            return Err(Error::Tubular(format!("graph normal turns over at node {j}")));
        }
        let mut g = -(x.mean_curvature[j] - 0.5 * x.support[j]);
        if let Some(m) = motion {
            g -= m.fdot[j] * dot(m.sigma_normal[j], x.normal[j]) + u[j] * dot(m.ndot[j], x.normal[j]);
        }
        vel[j] = g / c;
    }
    Ok(Evaluation { velocity: vel, surface: Some(x) })
}

fn surface_diagnostics(t: f64, l2: f64, sup: f64, x: Option<&ShrinkerGeometry>) -> SliceDiagnostics {
    let (f_value, dissipation, residual) = match x {
        Some(x) => {
            let r = x.residual();
            let diss = r.iter().zip(&x.gauss_weights).map(|(a, w)| a * a * w).sum();
            (f_functional(x), diss, sup_norm(&r))
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    SliceDiagnostics { time: t, l2, sup, f_value, dissipation, residual }
}

/// One sample of the forcing: `velocity` is the full right-hand side, `scale` multiplies
/// its part beyond the diagonal linear flow. `None` means pure linear flow.
struct Forcing {
    velocity: Option<Vec<f64>>,
    scale: f64,
    surface: Option<ShrinkerGeometry>,
}

/// Flow engine tied to a certified shrinker and its spectral decomposition.
pub struct ShrinkerFlow<'a> {
    pub base: &'a ShrinkerGeometry,
    pub spec: &'a SpectralDecomposition,
    pub radius: f64,
    zero_velocity: Vec<f64>,
    weak: WeakForm,
    d1: nalgebra::DMatrix<f64>,
}

/// Required shrinker residual for dynamics.
pub const BASE_RESIDUAL_TOL: f64 = 1e-8;

impl<'a> ShrinkerFlow<'a> {
    pub fn new(base: &'a ShrinkerGeometry, spec: &'a SpectralDecomposition) -> Result<Self> {
        let res = base.residual_norm();
        if !(res <= BASE_RESIDUAL_TOL) {
            return Err(Error::Precondition(format!("base shrinker residual {res:.3e} above {BASE_RESIDUAL_TOL:.0e}")));
        }
        if spec.n() != base.n() {
            return Err(Error::Grid("spectral basis and base grid differ".into()));
        }
        let radius = base.tubular_radius();
        let zero_velocity = raw_velocity(base, &vec![0.0; base.n()], radius, None)?.velocity;
        Ok(ShrinkerFlow {
            base,
            spec,
            radius,
            zero_velocity,
            weak: WeakForm::new(base, 0),
            d1: base.grid.d1.clone(),
        })
    }

    /// 𝓜u: graph velocity with the (residual-level) velocity of the zero graph removed,
    /// so that u ≡ 0 is an exact fixed point.
    pub fn velocity(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.velocity_eval(u)?.velocity)
    }

    fn velocity_eval(&self, u: &[f64]) -> Result<Evaluation> {
        let mut e = raw_velocity(self.base, u, self.radius, None)?;
        e.velocity.iter_mut().zip(&self.zero_velocity).for_each(|(v, z)| *v -= z);
        Ok(e)
    }

    pub fn linear(&self, u: &[f64]) -> Vec<f64> {
        self.weak.apply(u)
    }

    /// 𝒬(u) = 𝓜u − Lu.
    pub fn nonlinearity(&self, u: &[f64]) -> Result<GraphFunction> {
        let m = self.velocity(u)?;
        let l = self.linear(u);
        Ok(GraphFunction::new(m.iter().zip(&l).map(|(a, b)| a - b).collect()))
    }

    pub fn realize(&self, u: &[f64]) -> Result<ShrinkerGeometry> {
        let pos = crate::geometry::graph_surface_within(self.base, u, self.radius)?;
        ShrinkerGeometry::from_positions(self.base.grid.clone(), pos)
    }

    pub fn rmcf(&self, u0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
        let floor = opts.noise_floor;
        self.integrate(u0, span, opts, BaseKind::Static, |_, u, _, diag| {
            if sup_norm(u) < floor {
                let surface = if diag { Some(self.realize(u)?) } else { None };
                return Ok(Forcing { velocity: None, scale: 0.0, surface });
            }
            let e = self.velocity_eval(u)?;
            Ok(Forcing { velocity: Some(e.velocity), scale: 1.0, surface: e.surface })
        })
    }

    /// u̇ = Lu + χ(‖u‖/δ)𝒬(u); 𝒬 is not evaluated where χ vanishes.
    pub fn truncated(&self, u0: &[f64], span: (f64, f64), trunc: &TruncationConfig, opts: &FlowOptions) -> Result<FlowTrajectory> {
        let floor = opts.noise_floor;
        self.integrate(u0, span, opts, BaseKind::Static, |_, u, norm, diag| {
            let x = trunc.factor(norm);
            if x == 0.0 || sup_norm(u) < floor {
                return Ok(Forcing { velocity: None, scale: 0.0, surface: None });
            }
            let e = self.velocity_eval(u)?;
            let surface = if diag { e.surface } else { None };
            Ok(Forcing { velocity: Some(e.velocity), scale: x, surface })
        })
    }

    /// Parent kinematics at time t: P = Σ + f n_Σ with ḟ = 𝓜f.
    fn parent_state(&self, parent: &FlowTrajectory, t: f64) -> Result<(ShrinkerGeometry, Motion, f64)> {
        let f = parent.at(t);
        let fdot = self.velocity(&f)?;
        let p = self.realize(&f)?;
        let n = self.base.n();
        let diff = |v: DVector<f64>| -> Vec<f64> { (&self.d1 * v).iter().copied().collect() };
        // ∂θ(ḟ n_Σ) componentwise
        let dx = diff(DVector::from_iterator(n, (0..n).map(|j| fdot[j] * self.base.normal[j][0])));
        let dy = diff(DVector::from_iterator(n, (0..n).map(|j| fdot[j] * self.base.normal[j][1])));
        let ndot = (0..n)
            .map(|j| {
                let a = (dx[j] * p.normal[j][0] + dy[j] * p.normal[j][1]) / p.speed[j];
                [-a * p.tangent[j][0], -a * p.tangent[j][1]]
            })
            .collect();
        let radius = p.tubular_radius();
        Ok((p, Motion { fdot, sigma_normal: self.base.normal.clone(), ndot }, radius))
    }

    fn check_parent(&self, parent: &FlowTrajectory, span: (f64, f64)) -> Result<()> {
        if parent.base != BaseKind::Static {
            return Err(Error::Precondition("parent must be a graph over the base shrinker".into()));
        }
        if parent.is_empty() || span.0 < parent.times[0] - 1e-12 || span.1 > parent.t_end() + 1e-12 {
            return Err(Error::Precondition("time span not covered by the parent trajectory".into()));
        }
        Ok(())
    }

    /// Graph v over the moving parent M_t so that M_t + v n_t is itself an RMCF.
    pub fn over_parent(&self, parent: &FlowTrajectory, v0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
        self.check_parent(parent, span)?;
        let floor = opts.noise_floor;
        self.integrate(v0, span, opts, BaseKind::Moving, |t, v, _, diag| {
            let (p, motion, radius) = self.parent_state(parent, t)?;
            if sup_norm(v) < floor {
                let lin = self.parent_linear(&p, &motion, v);
                let surface = if diag {
                    Some(ShrinkerGeometry::from_positions(p.grid.clone(), crate::geometry::graph_surface_within(&p, v, radius)?)?)
                } else {
                    None
                };
                return Ok(Forcing { velocity: Some(lin), scale: 1.0, surface });
            }
            let g0 = raw_velocity(&p, &vec![0.0; v.len()], radius, Some(&motion))?.velocity;
            let mut e = raw_velocity(&p, v, radius, Some(&motion))?;
            e.velocity.iter_mut().zip(&g0).for_each(|(a, b)| *a -= b);
            Ok(Forcing { velocity: Some(e.velocity), scale: 1.0, surface: e.surface })
        })
    }

    /// L_P v plus the transport term ḟ⟨n_Σ, T_P⟩ ∂_s v that appears because graphs are
    /// taken along n_P at fixed parameter.
    fn parent_linear(&self, p: &ShrinkerGeometry, motion: &Motion, v: &[f64]) -> Vec<f64> {
        let wf = WeakForm::new(p, 0);
        let mut out = wf.apply(v);
        let ds = p.d_ds(v);
        for j in 0..v.len() {
            out[j] += motion.fdot[j] * dot(motion.sigma_normal[j], p.tangent[j]) * ds[j];
        }
        out
    }

    /// Linearized flow along a parent trajectory (the variational equation).
    pub fn variational(&self, parent: &FlowTrajectory, v0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
        self.check_parent(parent, span)?;
        self.integrate(v0, span, opts, BaseKind::Linear, |t, v, _, _| {
            let (p, motion, _) = self.parent_state(parent, t)?;
            Ok(Forcing { velocity: Some(self.parent_linear(&p, &motion, v)), scale: 1.0, surface: None })
        })
    }

    fn integrate<F>(&self, u0: &[f64], span: (f64, f64), opts: &FlowOptions, kind: BaseKind, mut forcing: F) -> Result<FlowTrajectory>
    where
        F: FnMut(f64, &[f64], f64, bool) -> Result<Forcing>,
    {
        opts.validate()?;
        let (t0, t1) = span;
        if !(t1 >= t0) {
            return Err(Error::Config(format!("time span [{t0}, {t1}]")));
        }
        if u0.len() != self.base.n() {
            return Err(Error::Grid("initial data length differs from grid".into()));
        }
        let spec = self.spec;
        let lam = &spec.eigenvalues;
        let mut c = spec.coeffs(u0);
        let mut traj = FlowTrajectory {
            times: vec![],
            slices: vec![],
            diagnostics: vec![],
            realized: vec![],
            exit: None,
            steps: 0,
            base: kind,
        };
        let mut t = t0;
        let mut step = 0usize;
        let tiny = 1e-12 * (1.0 + t1.abs());
        loop {
            let u = spec.synth(&c);
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if opts.require_positive && u.iter().any(|x| *x <= 0.0) {
                return Err(Error::Positivity(t));
            }
            let done = t >= t1 - tiny;
            let record = step % opts.record_every == 0 || done;
            let f = match forcing(t, &u, norm, opts.diagnostics && record) {
                Ok(f) => f,
                Err(Error::Tubular(_)) | Err(Error::Degenerate(_)) => {
                    traj.exit = Some(ExitEvent { time: t, reason: ExitReason::Tubular, last_valid: traj.len().saturating_sub(1) });
                    break;
                }
                Err(e) => return Err(e),
            };
            if record {
                self.push(&mut traj, t, u.clone(), norm, opts.diagnostics, f.surface.as_ref());
            }
            if done {
                break;
            }
            let q: Vec<f64> = match &f.velocity {
                Some(v) if f.scale != 0.0 => {
                    let p = spec.coeffs(v);
                    p.iter().zip(&c).zip(lam).map(|((a, x), l)| f.scale * (a - l * x)).collect()
                }
                _ => vec![0.0; c.len()],
            };
            let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut dt = match opts.step {
                StepControl::Fixed(dt) => dt,
                StepControl::Adaptive { cap, rel, abs, min } => {
                    let dt = if qn > 0.0 { cap.min((rel * norm + abs) / qn) } else { cap };
                    if dt < min {
                        return Err(Error::Stiffness(t));
                    }
                    dt
                }
            };
            if t + dt > t1 - tiny {
                dt = t1 - t;
            }
            let next: Vec<f64> = c
                .iter()
                .zip(&q)
                .zip(lam)
                .map(|((x, qi), l)| {
                    let z = l * dt;
                    let phi = if z.abs() < 1e-8 { dt * (1.0 + 0.5 * z) } else { z.exp_m1() / l };
                    (z).exp() * x + phi * qi
                })
                .collect();
            let next_norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            step += 1;
            traj.steps = step;
            if let Some(stop) = opts.stop_norm {
                if next_norm >= stop && norm < stop {
                    let a = (stop - norm) / (next_norm - norm);
                    let te = t + a * dt;
                    let cm: Vec<f64> = c.iter().zip(&next).map(|(x, y)| (1.0 - a) * x + a * y).collect();
                    if !record {
                        self.push(&mut traj, t, u.clone(), norm, false, None);
                    }
                    let last_valid = traj.len() - 1;
                    let um = spec.synth(&cm);
                    let surf = if opts.diagnostics { forcing(te, &um, stop, true).ok().and_then(|f| f.surface) } else { None };
                    self.push(&mut traj, te, um, stop, opts.diagnostics, surf.as_ref());
                    traj.exit = Some(ExitEvent { time: te, reason: ExitReason::Threshold, last_valid });
                    break;
                }
            }
            c = next;
            t += dt;
        }
        Ok(traj)
    }

    fn push(&self, traj: &mut FlowTrajectory, t: f64, u: Vec<f64>, norm: f64, diag: bool, surface: Option<&ShrinkerGeometry>) {
        if let Some(&last) = traj.times.last() {
            if t <= last {
                return;
            }
        }
        let sup = sup_norm(&u);
        traj.diagnostics.push(surface_diagnostics(t, norm, sup, if diag { surface } else { None }));
        if diag {
            if let Some(s) = surface {
                traj.realized.push(s.position.clone());
            }
        }
        traj.times.push(t);
        let coeffs = Some(self.spec.coeffs(&u));
        traj.slices.push(GraphFunction { values: u, coeffs });
    }
}

pub fn rmcf_over_shrinker(flow: &ShrinkerFlow, u0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
    flow.rmcf(u0, span, opts)
}

pub fn truncated_rmcf(
    flow: &ShrinkerFlow,
    u0: &[f64],
    span: (f64, f64),
    trunc: &TruncationConfig,
    opts: &FlowOptions,
) -> Result<FlowTrajectory> {
    flow.truncated(u0, span, trunc, opts)
}

pub fn rmcf_over_flow(flow: &ShrinkerFlow, parent: &FlowTrajectory, v0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
    flow.over_parent(parent, v0, span, opts)
}

pub fn variational_flow(flow: &ShrinkerFlow, parent: &FlowTrajectory, v0: &[f64], span: (f64, f64), opts: &FlowOptions) -> Result<FlowTrajectory> {
    flow.variational(parent, v0, span, opts)
}

pub fn nonlinearity(flow: &ShrinkerFlow, u: &[f64]) -> Result<GraphFunction> {
    flow.nonlinearity(u)
}

/// An ambient observable g(x) with its gradient, in profile coordinates.
pub type Observable<'a> = &'a dyn Fn([f64; 2]) -> (f64, [f64; 2]);

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    /// Finite-difference d/dt ∫ g e^{−|x|²/4} between consecutive slices.
    pub lhs: Vec<f64>,
    /// Midpoint average of ∫(V⟨∇g,n⟩ − g(H − ⟨x,n⟩/2)²) e^{−|x|²/4}.
    pub rhs: Vec<f64>,
    pub max_defect: f64,
    /// Largest |rhs integrand| seen, for scaling the defect.
    pub max_rate: f64,
    pub f_monotone: bool,
}

/// Weighted-integral balance along a trajectory with realized surfaces. With `g = None`
/// the observable is g ≡ 1 and the balance is Huisken's monotonicity.
pub fn conservation_diagnostics(traj: &FlowTrajectory, base: &ShrinkerGeometry, g: Option<Observable>) -> Result<ConservationReport> {
    if traj.realized.len() != traj.len() || traj.len() < 2 {
        return Err(Error::Precondition("trajectory recorded without realized surfaces".into()));
    }
    let mut vals = Vec::with_capacity(traj.len());
    let mut rates = Vec::with_capacity(traj.len());
    for pos in &traj.realized {
        let x = ShrinkerGeometry::from_positions(base.grid.clone(), pos.clone())?;
        let mut integral = 0.0;
        let mut rate = 0.0;
        for j in 0..x.n() {
            let r = x.mean_curvature[j] - 0.5 * x.support[j];
            let (gv, grad) = match g {
                Some(g) => g(x.position[j]),
                None => (1.0, [0.0, 0.0]),
            };
            integral += gv * x.gauss_weights[j];
            rate += (-r * dot(grad, x.normal[j]) - gv * r * r) * x.gauss_weights[j];
        }
        vals.push(integral);
        rates.push(rate);
    }
    let mut lhs = vec![];
    let mut rhs = vec![];
    let mut max_defect: f64 = 0.0;
    for k in 1..traj.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let l = (vals[k] - vals[k - 1]) / dt;
        let r = 0.5 * (rates[k] + rates[k - 1]);
        max_defect = max_defect.max((l - r).abs());
        lhs.push(l);
        rhs.push(r);
    }
    let f_vals: Vec<f64> = traj.diagnostics.iter().map(|d| d.f_value).collect();
    let max_rate = rates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let f_monotone = f_vals.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
    Ok(ConservationReport { times: traj.times[1..].to_vec(), lhs, rhs, max_defect, max_rate, f_monotone })
}

/// Gaussian energy ∫u² e^{−|x|²/4} along the trajectory against e^{C(t − t̂)} with
/// C = 2 max(|A|² + ½) over realized surfaces (or the base when none are stored).
pub fn energy_estimate(traj: &FlowTrajectory, base: &ShrinkerGeometry) -> Result<(f64, bool)> {
    let amax = if traj.realized.is_empty() {
        base.second_fundamental_sq.iter().fold(0.0f64, |m, a| m.max(*a))
    } else {
        let mut m: f64 = 0.0;
        for pos in &traj.realized {
            let x = ShrinkerGeometry::from_positions(base.grid.clone(), pos.clone())?;
            m = x.second_fundamental_sq.iter().fold(m, |m, a| m.max(*a));
        }
        m
    };
    let c = 2.0 * (amax + 0.5);
    let e0 = traj.diagnostics[0].l2.powi(2);
    let ok = traj
        .diagnostics
        .iter()
        .all(|d| d.l2.powi(2) <= e0 * (c * (d.time - traj.times[0])).exp() * (1.0 + 1e-9) + 1e-300);
    Ok((c, ok))
}

/// Plane curves and tori need the full basis for the flow to be exact on node values.
pub fn complete_basis(spec: &SpectralDecomposition, kind: SurfaceKind) -> bool {
    match kind {
        SurfaceKind::Rotational(crate::geometry::Topology::Sphere) => 2 * spec.k() >= spec.n(),
        _ => spec.k() == spec.n(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_circle;
    use crate::spectral::{assemble_linearized_operator, eigendecompose, semigroup_apply};
    use std::f64::consts::SQRT_2;

    fn circle(n: usize) -> (ShrinkerGeometry, SpectralDecomposition) {
        let c = build_circle(SQRT_2, n).unwrap();
        let s = eigendecompose(&assemble_linearized_operator(&c), n).unwrap();
        (c, s)
    }

    #[test]
    fn chi_profile() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=200 {
            let x = i as f64 / 100.0;
            assert!(chi(x) <= prev + 1e-15);
            prev = chi(x);
            let h = 1e-6;
            let fd = (chi(x + h) - chi(x - h)) / (2.0 * h);
            assert!((fd - chi_prime(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_graph_is_fixed() {
        let (c, s) = circle(64);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let tr = f.rmcf(&vec![0.0; 64], (0.0, 1.0), &FlowOptions::default()).unwrap();
        assert!(tr.last().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn concentric_circles_follow_radius_ode() {
        let (c, s) = circle(32);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let h = 0.01;
        let u0 = vec![h; 32];
        let tr = f.rmcf(&u0, (0.0, 1.0), &FlowOptions::fixed(1e-4)).unwrap();
        // r r' = r²/2 − 1  ⇒  r² − 2 = (r₀² − 2) e^t
        let r0 = SQRT_2 + h;
        let r1 = (2.0 + (r0 * r0 - 2.0) * 1f64.exp()).sqrt();
        let err = (tr.last()[5] - (r1 - SQRT_2)).abs();
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn linear_regime_matches_semigroup() {
        let (c, s) = circle(32);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let u0: Vec<f64> = c.params().iter().map(|t| 1e-8 * (1.0 + (2.0 * t).cos())).collect();
        let tr = f.rmcf(&u0, (0.0, 2.0), &FlowOptions::default()).unwrap();
        let exact = semigroup_apply(&s, 2.0, &u0).unwrap();
        let err = tr.last().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10 * 1e-8 * 10.0 + 1e-18, "err {err}");
    }

    #[test]
    fn nonlinearity_is_quadratic() {
        let (c, s) = circle(64);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let phi: Vec<f64> = c.params().iter().map(|t| (3.0 * t).cos() + 0.3 * t.sin()).collect();
        let q = |h: f64| {
            let u: Vec<f64> = phi.iter().map(|x| h * x).collect();
            sup_norm(&f.nonlinearity(&u).unwrap().values)
        };
        let slope = (q(1e-3) / q(5e-4)).log2();
        assert!(slope > 1.9, "slope {slope}");
    }

    #[test]
    fn parent_zero_and_static_parent() {
        let (c, s) = circle(32);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let parent = f.rmcf(&vec![0.0; 32], (0.0, 0.5), &FlowOptions::fixed(1e-2)).unwrap();
        let v0: Vec<f64> = c.params().iter().map(|t| 1e-3 * (2.0 * t).sin()).collect();
        let a = f.over_parent(&parent, &v0, (0.0, 0.5), &FlowOptions::fixed(1e-2)).unwrap();
        let b = f.rmcf(&v0, (0.0, 0.5), &FlowOptions::fixed(1e-2)).unwrap();
        let err = a.last().iter().zip(b.last()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-12, "err {err}");
        let z = f.over_parent(&parent, &vec![0.0; 32], (0.0, 0.5), &FlowOptions::fixed(1e-2)).unwrap();
        assert!(sup_norm(z.last()) == 0.0);
    }

    #[test]
    fn threshold_exit_is_interpolated() {
        let (c, s) = circle(32);
        let f = ShrinkerFlow::new(&c, &s).unwrap();
        let u0 = vec![1e-4; 32];
        let opts = FlowOptions { stop_norm: Some(1e-3), ..Default::default() };
        let tr = f.rmcf(&u0, (0.0, 20.0), &opts).unwrap();
        let ex = tr.exit.unwrap();
        assert_eq!(ex.reason, ExitReason::Threshold);
        assert!((tr.diagnostics.last().unwrap().l2 - 1e-3).abs() < 1e-15);
        assert!(ex.time > 1.2 && ex.time < 1.7, "{}", ex.time);
    }
}
