//! Dynamical experiments and inequality checks on the desk-scale shrinkers.
//!
//! A [`Lab`] holds the configuration and the certified shrinkers; each experiment takes
//! it by reference and returns an [`ExperimentReport`].

pub mod ancient;
pub mod cone;
pub mod drift;
pub mod entropy;
pub mod graphs;
pub mod parabolic;
pub mod pipeline;
pub mod suites;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::flow::{BaseKind, FlowOptions, FlowTrajectory, ShrinkerFlow, SliceDiagnostics, StepControl, TruncationConfig};
use crate::geometry::{build_circle, l2_norm, sup_norm, GraphFunction, ShrinkerGeometry};
use crate::manifolds::{lp_stable, LpConfig, ModeSets, TruncatedModel};
use crate::report::ExperimentReport;
use crate::shrinkers::{solve_torus_profile, ShootingConfig, TorusSolve};
use crate::spectral::{assemble_linearized_operator, eigendecompose, SpectralDecomposition};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use entropy::{entropy, EntropyResult};
pub use graphs::{compose_graphs, transplant};

pub const EXPERIMENTS: [&str; 13] = [
    "spectrum",
    "flow",
    "manifolds",
    "entropy",
    "entropy_decrease",
    "gap",
    "transplant",
    "harnack",
    "liyau",
    "cone",
    "drift",
    "pipeline",
    "ancient",
];

pub struct Lab {
    pub config: Config,
    pub torus: ShrinkerGeometry,
    pub torus_spec: SpectralDecomposition,
    pub torus_solve: TorusSolve,
    pub circle: ShrinkerGeometry,
    pub circle_spec: SpectralDecomposition,
}

impl Lab {
    pub fn new(config: Config) -> Result<Lab> {
        let n = config.surface.n_dynamics;
        let shoot = ShootingConfig { grid: n, newton_tolerance: config.surface.residual_tol, ..Default::default() };
        let (torus, torus_solve) = solve_torus_profile(&shoot)?;
        let torus_spec = eigendecompose(&assemble_linearized_operator(&torus), n)?;
        let circle = build_circle(config.surface.circle_radius, config.surface.circle_n)?;
        let circle_spec = eigendecompose(&assemble_linearized_operator(&circle), circle.n())?;
        Ok(Lab { config, torus, torus_spec, torus_solve, circle, circle_spec })
    }

    pub fn torus_flow(&self) -> Result<ShrinkerFlow<'_>> {
        ShrinkerFlow::new(&self.torus, &self.torus_spec)
    }

    pub fn circle_flow(&self) -> Result<ShrinkerFlow<'_>> {
        ShrinkerFlow::new(&self.circle, &self.circle_spec)
    }

    /// Per-trial generator: the run seed on its own ChaCha stream.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.config.run.seed);
        r.set_stream(stream);
        r
    }

    pub fn adaptive(&self) -> FlowOptions {
        let f = &self.config.flow;
        FlowOptions {
            step: StepControl::Adaptive { cap: f.cap, rel: f.rel, abs: f.abs, min: f.min_dt },
            noise_floor: f.noise_floor,
            ..Default::default()
        }
    }

    pub fn fixed(&self, dt: f64) -> FlowOptions {
        FlowOptions { noise_floor: self.config.flow.noise_floor, ..FlowOptions::fixed(dt) }
    }

    pub fn truncation(&self) -> Result<TruncationConfig> {
        TruncationConfig::new(self.config.truncation.delta)
    }

    pub fn lp_config(&self) -> LpConfig {
        let m = &self.config.manifolds;
        LpConfig { dt: m.dt, horizon: m.horizon, shift: None, tol: m.tol, max_sweeps: m.max_sweeps, tail_tol: m.tail_tol }
    }

    /// A parent flow M_t = Σ + f(t)n converging to the torus: the stable-chart orbit
    /// through a multiple of the first stable eigenfunction.
    pub fn stable_parent(&self, flow: &ShrinkerFlow) -> Result<FlowTrajectory> {
        let p = &self.config.parent;
        let spec = flow.spec;
        let fs = spec
            .eigenvalues
            .iter()
            .position(|l| *l < -spec.zero_tol)
            .ok_or_else(|| Error::Precondition("no stable eigenvalue".into()))?;
        let model = TruncatedModel::new(flow, self.config.manifolds.modes, self.truncation()?);
        let sets = ModeSets::classify(&model.lambda, spec.zero_tol);
        let mut xi = vec![0.0; model.lambda.len()];
        xi[fs] = p.amplitude;
        let cfg = LpConfig { dt: p.dt, horizon: p.horizon, ..self.lp_config() };
        let sol = lp_stable(&model, &sets, &xi, &cfg)?;
        let mut traj = FlowTrajectory {
            times: vec![],
            slices: vec![],
            diagnostics: vec![],
            realized: vec![],
            exit: None,
            steps: sol.times.len().saturating_sub(sol.zero_index + 1),
            base: BaseKind::Static,
        };
        for (t, c) in sol.times.iter().zip(&sol.orbit).skip(sol.zero_index) {
            let mut full = vec![0.0; spec.k()];
            full[..c.len()].copy_from_slice(c);
            let u = spec.synth(&full);
            let l2 = l2_norm(&u, flow.base);
            traj.diagnostics.push(SliceDiagnostics {
                time: *t,
                l2,
                sup: sup_norm(&u),
                f_value: f64::NAN,
                dissipation: f64::NAN,
                residual: f64::NAN,
            });
            traj.times.push(*t);
            traj.slices.push(GraphFunction { values: u, coeffs: Some(full) });
        }
        Ok(traj)
    }
}

/// Standard normal vector.
pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random smooth function from the leading `modes` eigenfunctions, scaled to sup norm 1.
pub fn random_smooth(rng: &mut ChaCha8Rng, spec: &SpectralDecomposition, modes: usize) -> Vec<f64> {
    let mut c = vec![0.0; spec.k()];
    for (i, g) in gaussian_vec(rng, modes.min(spec.k())).into_iter().enumerate() {
        c[i] = g / (1.0 + i as f64);
    }
    let u = spec.synth(&c);
    let s = sup_norm(&u).max(1e-300);
    u.into_iter().map(|x| x / s).collect()
}

/// φ₁ with the sign making it positive.
pub fn positive_phi1(spec: &SpectralDecomposition) -> Vec<f64> {
    let p = spec.phi(0);
    if p.iter().sum::<f64>() < 0.0 {
        p.into_iter().map(|x| -x).collect()
    } else {
        p
    }
}

/// Arclength positions of the nodes and the total length of the parameter loop.
pub fn arclength(geo: &ShrinkerGeometry) -> (Vec<f64>, f64) {
    let h = geo.grid.basis.step();
    let mut s = vec![0.0; geo.n()];
    for j in 1..geo.n() {
        s[j] = s[j - 1] + 0.5 * (geo.speed[j - 1] + geo.speed[j]) * h;
    }
    let total = s[geo.n() - 1] + 0.5 * (geo.speed[geo.n() - 1] + geo.speed[0]) * h;
    (s, total)
}

/// Positive bump ε + exp(−d²/2σ²) in periodic arclength distance d from node `center`,
/// with ε chosen so that max/min ≈ `ratio`.
pub fn bump(geo: &ShrinkerGeometry, center: usize, width: f64, ratio: f64) -> Vec<f64> {
    let (s, total) = arclength(geo);
    let eps = 1.0 / (ratio - 1.0).max(1e-12);
    s.iter()
        .map(|x| {
            let d = (x - s[center]).abs();
            let d = d.min(total - d);
            eps + (-d * d / (2.0 * width * width)).exp()
        })
        .collect()
}

/// Runs one experiment by name.
pub fn run(lab: &Lab, name: &str) -> Result<ExperimentReport> {
    match name {
        "spectrum" => suites::spectrum_suite(lab),
        "flow" => suites::flow_suite(lab),
        "manifolds" => suites::manifold_suite(lab),
        "entropy" => entropy::entropy_experiment(lab),
        "entropy_decrease" => entropy::entropy_decrease_experiment(lab),
        "gap" => graphs::linearization_gap_experiment(lab),
        "transplant" => graphs::transplant_experiment(lab),
        "harnack" => parabolic::harnack_experiment(lab),
        "liyau" => parabolic::liyau_experiment(lab),
        "cone" => cone::cone_invariance_experiment(lab),
        "drift" => drift::drift_experiment(lab),
        "pipeline" => pipeline::global_genericity_pipeline(lab),
        "ancient" => ancient::ancient_limit_experiment(lab),
        other => Err(Error::Config(format!("unknown experiment `{other}`; expected one of {}", EXPERIMENTS.join(", ")))),
    }
}
