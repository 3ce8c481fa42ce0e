//! The linearized operator L = Δ − ½⟨x,∇·⟩ + |A|² + ½ in the Gaussian-weighted inner
//! product, its spectrum, splittings, semigroup, cone predicate and norms.

use crate::error::{Error, Result};
use crate::geometry::{ShrinkerGeometry, SurfaceKind, Topology};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

/// Weak form of L: `a` is the symmetric matrix of the bilinear form, `weights` the
/// diagonal mass matrix, so that L u = W⁻¹ A u.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub a: DMatrix<f64>,
    pub weights: Vec<f64>,
    /// Azimuthal wave number m of the block (0 for plane curves).
    pub azimuthal: usize,
    /// For sphere profiles, the reflection partner of each node and the parity of the block.
    pub parity: Option<(Vec<usize>, bool)>,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let au = &self.a * DVector::from_column_slice(u);
        au.iter().zip(&self.weights).map(|(x, w)| x / w).collect()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.a - self.a.transpose()).norm() / self.a.norm()
    }
}

pub fn assemble_linearized_operator(geo: &ShrinkerGeometry) -> OperatorMatrix {
    assemble_block(geo, 0)
}

/// Matrix-free weak form: L u = W⁻¹(−Bᵀ(c ⊙ B u) + p ⊙ u) with B the derivative of the
/// interpolant on the fine quadrature grid.
#[derive(Clone, Debug)]
pub struct WeakForm {
    pub fine_coef: Vec<f64>,
    pub potential: Vec<f64>,
    pub weights: Vec<f64>,
    grid: std::sync::Arc<crate::geometry::Grid>,
}

impl WeakForm {
    pub fn new(geo: &ShrinkerGeometry, m: usize) -> WeakForm {
        let g = &geo.grid;
        let n = geo.n();
        let xs = DVector::from_iterator(n, geo.position.iter().map(|p| p[0]));
        let ys = DVector::from_iterator(n, geo.position.iter().map(|p| p[1]));
        let xf = &g.fine_interp * &xs;
        let yf = &g.fine_interp * &ys;
        let dxf = &g.fine_d1 * &xs;
        let dyf = &g.fine_d1 * &ys;
        let rotational = matches!(geo.kind, SurfaceKind::Rotational(_));
        let fine_coef = (0..2 * n)
            .map(|i| {
                let s = dxf[i].hypot(dyf[i]);
                let rho = (-(xf[i] * xf[i] + yf[i] * yf[i]) / 4.0).exp();
                let area = if rotational { 2.0 * std::f64::consts::PI * xf[i].abs() } else { 1.0 };
                g.fine_quad[i] * rho * area / s
            })
            .collect();
        let potential = (0..n)
            .map(|i| {
                let mut pot = geo.second_fundamental_sq[i] + 0.5;
                if rotational && m > 0 {
                    let r = geo.position[i][0];
                    pot -= (m * m) as f64 / (r * r);
                }
                geo.gauss_weights[i] * pot
            })
            .collect();
        WeakForm { fine_coef, potential, weights: geo.gauss_weights.clone(), grid: g.clone() }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut du = &g.fine_d1 * DVector::from_column_slice(u);
        du.iter_mut().zip(&self.fine_coef).for_each(|(d, c)| *d *= c);
        let back = g.fine_d1.tr_mul(&du);
        (0..u.len()).map(|i| (-back[i] + self.potential[i] * u[i]) / self.weights[i]).collect()
    }
}

/// Operator restricted to functions u(θ) e^{imφ} on a rotational surface.
pub fn assemble_block(geo: &ShrinkerGeometry, m: usize) -> OperatorMatrix {
    let g = &geo.grid;
    let n = geo.n();
    let wf = WeakForm::new(geo, m);
    let mut scaled = g.fine_d1.clone();
    for i in 0..2 * n {
        for j in 0..n {
            scaled[(i, j)] *= wf.fine_coef[i];
        }
    }
    let stiff = g.fine_d1.transpose() * scaled;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (stiff[(i, j)] + stiff[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a[(i, i)] += wf.potential[i];
    }
    let parity = if geo.kind == SurfaceKind::Rotational(Topology::Sphere) {
        Some(((0..n).map(|j| g.mirror(j)).collect(), m % 2 == 0))
    } else {
        None
    };
    OperatorMatrix { a, weights: geo.gauss_weights.clone(), azimuthal: m, parity }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column i is φ_i at the nodes, W-orthonormal.
    pub basis: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub morse_index: usize,
    pub zero_tol: f64,
    pub azimuthal: usize,
}

impl SpectralDecomposition {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn phi(&self, i: usize) -> Vec<f64> {
        self.basis.column(i).iter().copied().collect()
    }

    /// Coefficients ⟨u, φ_i⟩.
    pub fn coeffs(&self, u: &[f64]) -> Vec<f64> {
        let wu = DVector::from_iterator(u.len(), u.iter().zip(&self.weights).map(|(a, w)| a * w));
        (self.basis.transpose() * wu).iter().copied().collect()
    }

    pub fn synth(&self, c: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(c)).iter().copied().collect()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
    }

    /// Smallest eigenvalue classified as stable (first negative beyond zero_tol).
    pub fn first_stable(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|l| *l < -self.zero_tol)
    }

    /// Whether φ_1 keeps one sign on the grid.
    pub fn phi1_positive(&self) -> bool {
        let p = self.basis.column(0);
        p.iter().all(|x| *x > 0.0) || p.iter().all(|x| *x < 0.0)
    }

    /// max_i ‖Lφ_i − λ_iφ_i‖ in the weighted norm.
    pub fn eigen_residual(&self, op: &OperatorMatrix) -> f64 {
        (0..self.k())
            .map(|i| {
                let phi = self.phi(i);
                let lphi = op.apply(&phi);
                let r: Vec<f64> = lphi.iter().zip(&phi).map(|(a, b)| a - self.eigenvalues[i] * b).collect();
                self.norm(&r)
            })
            .fold(0.0, f64::max)
    }

    /// Copy keeping only the leading k modes.
    pub fn truncated(&self, k: usize) -> SpectralDecomposition {
        let k = k.min(self.k());
        SpectralDecomposition {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            basis: self.basis.columns(0, k).into_owned(),
            weights: self.weights.clone(),
            morse_index: self.morse_index,
            zero_tol: self.zero_tol,
            azimuthal: self.azimuthal,
        }
    }

    /// Copy with eigenvalue i replaced (used to adjoin an exact zero mode in tests of
    /// the center-manifold solver).
    pub fn with_eigenvalue(&self, i: usize, value: f64) -> SpectralDecomposition {
        let mut s = self.clone();
        s.eigenvalues[i] = value;
        s
    }
}

/// Top-k eigenpairs of the weighted problem A φ = λ W φ, descending.
pub fn eigendecompose(op: &OperatorMatrix, k: usize) -> Result<SpectralDecomposition> {
    let n = op.n();
    if k == 0 || k > n {
        return Err(Error::Eigen(format!("requested {k} eigenpairs of a {n}x{n} operator")));
    }
    let isq: Vec<f64> = op.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| op.a[(i, j)] * isq[i] * isq[j]);
    let q = match &op.parity {
        Some((mirror, even)) => {
            let half: Vec<usize> = (0..n).filter(|&j| j < mirror[j]).collect();
            let sign = if *even { 1.0 } else { -1.0 };
            let mut q = DMatrix::zeros(n, half.len());
            let c = std::f64::consts::FRAC_1_SQRT_2;
            for (col, &j) in half.iter().enumerate() {
                q[(j, col)] = c;
                q[(mirror[j], col)] = sign * c;
            }
            Some(q)
        }
        None => None,
    };
    let reduced = match &q {
        Some(q) => q.transpose() * &s * q,
        None => s,
    };
    if reduced.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("operator has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let k = k.min(order.len());
    let mut vals = Vec::with_capacity(k);
    let mut basis = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        vals.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let full = match &q {
            Some(q) => q * y,
            None => y,
        };
        let mut v: Vec<f64> = full.iter().zip(&isq).map(|(a, b)| a * b).collect();
        let pivot = if col == 0 {
            v.iter().sum::<f64>()
        } else {
            *v.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(&1.0)
        };
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        basis.set_column(col, &DVector::from_vec(v));
    }
    let top = vals.first().copied().unwrap_or(0.0).abs().max(1e-300);
    let zero_tol = 1e-6 * top;
    let morse_index = vals.iter().filter(|l| **l > zero_tol).count();
    Ok(SpectralDecomposition {
        eigenvalues: vals,
        basis,
        weights: op.weights.clone(),
        morse_index,
        zero_tol,
        azimuthal: op.azimuthal,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AzimuthalBlock {
    pub m: usize,
    pub multiplicity: usize,
    pub eigenvalues: Vec<f64>,
    pub positive: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AzimuthalSpectrum {
    pub blocks: Vec<AzimuthalBlock>,
    pub morse_index: usize,
}

/// Spectrum across azimuthal blocks; the Morse index counts each m > 0 block twice.
pub fn azimuthal_spectrum(geo: &ShrinkerGeometry, top_k: usize) -> Result<AzimuthalSpectrum> {
    let mut blocks = Vec::new();
    let max_m = match geo.kind {
        SurfaceKind::PlaneCurve => 0,
        SurfaceKind::Rotational(_) => 64,
    };
    let mut zero_tol = None;
    for m in 0..=max_m {
        let op = assemble_block(geo, m);
        let kk = top_k.min(op.n() / 2);
        let spec = eigendecompose(&op, kk)?;
        let tol = *zero_tol.get_or_insert(spec.zero_tol);
        let positive = spec.eigenvalues.iter().filter(|l| **l > tol).count();
        let multiplicity = if m == 0 { 1 } else { 2 };
        let done = spec.eigenvalues[0] < 0.0;
        blocks.push(AzimuthalBlock { m, multiplicity, eigenvalues: spec.eigenvalues, positive });
        if done {
            break;
        }
    }
    let morse_index = blocks.iter().map(|b| b.multiplicity * b.positive).sum();
    Ok(AzimuthalSpectrum { blocks, morse_index })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SplitMode {
    TwoWay,
    ThreeWay,
}

/// Rates ordered λ₂ < γ < β < λ₁ < ω and ω < −η for the cone lemma; `slow` is the
/// positive slow-growth exponent used for manifold trajectory spaces.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Rates {
    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
    pub omega: f64,
    pub slow: f64,
}

impl Rates {
    pub fn defaults(spec: &SpectralDecomposition) -> Result<Rates> {
        if spec.k() < 2 {
            return Err(Error::Gap("need at least two eigenvalues".into()));
        }
        let (l1, l2) = (spec.eigenvalues[0], spec.eigenvalues[1]);
        let gap = l1 - l2;
        let fs = spec.first_stable().unwrap_or(-1.0).abs();
        let slow = (0.5 * fs).min(0.1);
        let omega = l1 + 1.0;
        Ok(Rates { gamma: l2 + 0.25 * gap, beta: l2 + 0.75 * gap, omega, eta: -omega - slow, slow })
    }

    fn validate(&self, l1: f64, l2: f64) -> Result<()> {
        let ok = l2 < self.gamma && self.gamma < self.beta && self.beta < l1 && l1 < self.omega && self.omega < -self.eta;
        if ok && self.slow > 0.0 {
            Ok(())
        } else {
            Err(Error::Gap(format!("rate chain violated: {self:?} with λ1 = {l1}, λ2 = {l2}")))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSplitting {
    pub mode: SplitMode,
    pub rates: Option<Rates>,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub unstable: Vec<usize>,
    pub center: Vec<usize>,
    pub stable: Vec<usize>,
    pub zero_tol: f64,
}

pub fn split(spec: &SpectralDecomposition, mode: SplitMode, rates: Option<Rates>) -> Result<SpectralSplitting> {
    let tol = spec.zero_tol;
    let unstable: Vec<usize> = (0..spec.k()).filter(|&i| spec.eigenvalues[i] > tol).collect();
    let center: Vec<usize> = (0..spec.k()).filter(|&i| spec.eigenvalues[i].abs() <= tol).collect();
    let stable: Vec<usize> = (0..spec.k()).filter(|&i| spec.eigenvalues[i] < -tol).collect();
    let mut out = SpectralSplitting {
        mode,
        rates: None,
        plus: vec![0],
        minus: (1..spec.k()).collect(),
        unstable,
        center,
        stable,
        zero_tol: tol,
    };
    if mode == SplitMode::TwoWay {
        let (l1, l2) = (spec.eigenvalues[0], spec.eigenvalues.get(1).copied().unwrap_or(f64::NEG_INFINITY));
        if !(l1 > l2 + tol) {
            return Err(Error::Gap(format!("λ1 = {l1} is not separated from λ2 = {l2}")));
        }
        if (l1 - 1.0).abs() <= 1e-6 {
            return Err(Error::Gap(format!(
                "λ1 = {l1} equals the dilation eigenvalue; the two-way cone splitting targets non-spherical shrinkers"
            )));
        }
        let r = match rates {
            Some(r) => r,
            None => Rates::defaults(spec)?,
        };
        r.validate(l1, l2)?;
        out.rates = Some(r);
    }
    Ok(out)
}

impl SpectralSplitting {
    /// Coefficient mask projection onto a set of modes.
    pub fn project(&self, c: &[f64], set: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        for &i in set {
            out[i] = c[i];
        }
        out
    }
}

fn coeff_norm(c: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt()
}

/// e^{Lt} in spectral coordinates. Negative times are only allowed for data carried by
/// the unstable modes.
pub fn semigroup_apply(spec: &SpectralDecomposition, t: f64, u: &[f64]) -> Result<Vec<f64>> {
    let c = spec.coeffs(u);
    if t < 0.0 {
        let total = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let bad = c
            .iter()
            .zip(&spec.eigenvalues)
            .filter(|(_, l)| **l <= spec.zero_tol)
            .map(|(x, _)| x * x)
            .sum::<f64>()
            .sqrt();
        if bad > 1e-12 * total.max(1e-300) {
            return Err(Error::IllPosed);
        }
    }
    let out: Vec<f64> = c
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(x, l)| if t < 0.0 && *l <= spec.zero_tol { 0.0 } else { x * (l * t).exp() })
        .collect();
    Ok(spec.synth(&out))
}

/// (‖u₋‖, ‖u₊‖) in the Lyapunov norm of a two-way splitting. With a diagonal semigroup
/// and γ > λ₂ the supremum over t ≥ 0 sits at t = 0, so both equal weighted L² norms.
pub fn lyapunov_norm(spec: &SpectralDecomposition, split: &SpectralSplitting, u: &[f64]) -> Result<(f64, f64)> {
    if split.mode != SplitMode::TwoWay {
        return Err(Error::Precondition("Lyapunov norm needs a two-way splitting".into()));
    }
    let c = spec.coeffs(u);
    Ok((coeff_norm(&c, &split.minus), coeff_norm(&c, &split.plus)))
}

/// ‖e^{L₋t}u₋‖ ≤ e^{γt}‖u₋‖ and ‖e^{L₊t}u₊‖ ≥ e^{βt}‖u₊‖ checked directly.
pub fn certify_dichotomy(spec: &SpectralDecomposition, split: &SpectralSplitting, u: &[f64], t: f64) -> Result<bool> {
    let r = split.rates.ok_or_else(|| Error::Precondition("two-way rates missing".into()))?;
    let c = spec.coeffs(u);
    let evolve = |set: &[usize]| -> f64 {
        set.iter().map(|&i| (c[i] * (spec.eigenvalues[i] * t).exp()).powi(2)).sum::<f64>().sqrt()
    };
    let minus_ok = evolve(&split.minus) <= (r.gamma * t).exp() * coeff_norm(&c, &split.minus) * (1.0 + 1e-12);
    let plus_ok = evolve(&split.plus) >= (r.beta * t).exp() * coeff_norm(&c, &split.plus) * (1.0 - 1e-12);
    Ok(minus_ok && plus_ok)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeParams {
    pub kappa: f64,
    pub kappa_bar: f64,
}

impl ConeParams {
    /// κ̄ = (1/(2C₁δ)) e^{η+γ/2} (e^{β/2} − e^{γ/2}); κ is clamped to κ̄ (the flag reports clamping).
    pub fn new(kappa: f64, rates: &Rates, delta: f64, c1: f64) -> (ConeParams, bool) {
        let kappa_bar = kappa_bar(rates, delta, c1);
        let clamped = kappa > kappa_bar;
        (ConeParams { kappa: kappa.min(kappa_bar), kappa_bar }, clamped)
    }
}

pub fn kappa_bar(r: &Rates, delta: f64, c1: f64) -> f64 {
    (1.0 / (2.0 * c1 * delta)) * (r.eta + r.gamma / 2.0).exp() * ((r.beta / 2.0).exp() - (r.gamma / 2.0).exp())
}

/// margin = ‖u₊‖ − κ‖u₋‖; inside iff margin > 0.
pub fn cone_membership(spec: &SpectralDecomposition, split: &SpectralSplitting, u: &[f64], kappa: f64) -> (bool, f64) {
    let c = spec.coeffs(u);
    let margin = coeff_norm(&c, &split.plus) - kappa * coeff_norm(&c, &split.minus);
    (margin > 0.0, margin)
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct NormReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub holder: f64,
    pub c2_alpha: f64,
    pub c4: f64,
    pub l2: f64,
}

/// Discrete norms with arclength derivatives on the given surface.
pub fn norm_suite(u: &[f64], geo: &ShrinkerGeometry, alpha: f64) -> NormReport {
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut ders = vec![u.to_vec()];
    for _ in 0..4 {
        let next = geo.d_ds(ders.last().unwrap());
        ders.push(next);
    }
    let sups: Vec<f64> = ders.iter().map(|d| sup(d)).collect();
    let n = geo.n();
    let h = geo.grid.basis.step();
    let mut arc = vec![0.0; n + 1];
    for j in 0..n {
        arc[j + 1] = arc[j] + geo.speed[j] * h;
    }
    let total = arc[n];
    let d2 = &ders[2];
    let mut holder: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let sep = (arc[j] - arc[i]).abs();
            let dist = sep.min(total - sep);
            holder = holder.max((d2[i] - d2[j]).abs() / dist.powf(alpha));
        }
    }
    let c2 = sups[0] + sups[1] + sups[2];
    NormReport {
        c0: sups[0],
        c1: sups[1],
        c2,
        holder,
        c2_alpha: c2 + holder,
        c4: sups.iter().sum(),
        l2: crate::geometry::l2_norm(u, geo),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_circle, build_sphere_profile};
    use std::f64::consts::SQRT_2;

    #[test]
    fn circle_spectrum_closed_form() {
        let c = build_circle(SQRT_2, 128).unwrap();
        let op = assemble_linearized_operator(&c);
        assert!(op.symmetry_defect() < 1e-14);
        let s = eigendecompose(&op, 11).unwrap();
        let expect = [1.0, 0.5, 0.5, -1.0, -1.0, -3.5, -3.5, -7.0, -7.0, -11.5, -11.5];
        for (l, e) in s.eigenvalues.iter().zip(expect) {
            assert!((l - e).abs() < 1e-9, "{l} vs {e}");
        }
        assert_eq!(s.morse_index, 3);
        assert!(s.phi1_positive());
        assert!(s.eigen_residual(&op) < 1e-8);
    }

    #[test]
    fn matrix_free_agrees_with_assembled() {
        let e = crate::geometry::build_ellipse(1.6, 1.1, 64).unwrap();
        let op = assemble_linearized_operator(&e);
        let wf = WeakForm::new(&e, 0);
        let u: Vec<f64> = e.params().iter().map(|t| (3.0 * t).sin() + 0.2).collect();
        let (a, b) = (op.apply(&u), wf.apply(&u));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn constant_function_on_circle() {
        let c = build_circle(SQRT_2, 64).unwrap();
        let op = assemble_linearized_operator(&c);
        let l1 = op.apply(&vec![1.0; 64]);
        assert!(l1.iter().all(|x| (x - 1.0).abs() < 1e-11));
    }

    #[test]
    fn sphere_blocks() {
        let s = build_sphere_profile(2.0, 128).unwrap();
        let spec = eigendecompose(&assemble_linearized_operator(&s), 5).unwrap();
        for (l, deg) in spec.eigenvalues.iter().zip(0..) {
            let e = 1.0 - (deg * (deg + 1)) as f64 / 4.0;
            assert!((l - e).abs() < 1e-7, "{l} vs {e}");
        }
        let az = azimuthal_spectrum(&s, 6).unwrap();
        assert_eq!(az.morse_index, 4);
        // m = 1 block starts at l = 1
        assert!((az.blocks[1].eigenvalues[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn weights_are_orthonormal() {
        let c = build_circle(SQRT_2, 64).unwrap();
        let s = eigendecompose(&assemble_linearized_operator(&c), 64).unwrap();
        let g = s.basis.transpose() * DMatrix::from_diagonal(&DVector::from_vec(s.weights.clone())) * &s.basis;
        assert!((g - DMatrix::identity(64, 64)).amax() < 1e-10);
    }

    #[test]
    fn circle_rejects_two_way() {
        let c = build_circle(SQRT_2, 64).unwrap();
        let s = eigendecompose(&assemble_linearized_operator(&c), 20).unwrap();
        assert!(matches!(split(&s, SplitMode::TwoWay, None), Err(Error::Gap(_))));
        let t = split(&s, SplitMode::ThreeWay, None).unwrap();
        assert_eq!((t.unstable.len(), t.center.len()), (3, 0));
    }

    #[test]
    fn semigroup_backward_needs_unstable_data() {
        let c = build_circle(SQRT_2, 64).unwrap();
        let s = eigendecompose(&assemble_linearized_operator(&c), 64).unwrap();
        let phi3 = s.phi(3);
        assert!(matches!(semigroup_apply(&s, -1.0, &phi3), Err(Error::IllPosed)));
        let phi0 = s.phi(0);
        let back = semigroup_apply(&s, -1.0, &phi0).unwrap();
        assert!((back[0] - phi0[0] * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn norm_suite_on_cosine() {
        let c = build_circle(SQRT_2, 64).unwrap();
        let u: Vec<f64> = c.params().iter().map(|t| t.cos()).collect();
        let r = norm_suite(&u, &c, 0.25);
        assert!((r.c0 - 1.0).abs() < 1e-12);
        assert!((r.c1 - 1.0 / SQRT_2).abs() < 1e-3);
        let k = norm_suite(&vec![0.3; 64], &c, 0.25);
        assert!((k.c0 - 0.3).abs() < 1e-15 && k.c1 < 1e-13 && k.holder < 1e-12);
    }
}
