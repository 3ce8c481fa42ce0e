//! Trigonometric interpolation on uniform periodic grids.
//!
//! Nodes sit at `theta_j = offset + 2*pi*j/n`. The interpolant of node values is the
//! real trigonometric polynomial of degree n/2 whose Nyquist term is a pure cosine, so
//! odd derivatives of the Nyquist mode vanish at the nodes while even ones do not.

use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct TrigBasis {
    pub n: usize,
    pub offset: f64,
}

impl TrigBasis {
    pub fn new(n: usize, offset: f64) -> Self {
        TrigBasis { n, offset }
    }

    pub fn node(&self, j: usize) -> f64 {
        self.offset + 2.0 * PI * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Derivative of order `order` of every cardinal function at `theta`.
    pub fn cardinal_row(&self, theta: f64, order: u32) -> Vec<f64> {
        (0..self.n).map(|j| self.cardinal(theta - self.node(j), order)).collect()
    }

    /// Cardinal function centered at 0, evaluated at offset `d`.
    fn cardinal(&self, d: f64, order: u32) -> f64 {
        let n = self.n as f64;
        let half_sin = (0.5 * d).sin();
        if order <= 1 && half_sin.abs() > 1e-3 {
            // sin(n d/2) cot(d/2) / n and its derivative
            let (sn, cn) = (0.5 * n * d).sin_cos();
            let cot = (0.5 * d).cos() / half_sin;
            return if order == 0 {
                sn * cot / n
            } else {
                (0.5 * n * cn * cot - 0.5 * sn / (half_sin * half_sin)) / n
            };
        }
        let half = self.n / 2;
        let (s1, c1) = d.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = if order == 0 { 1.0 } else { 0.0 };
        for k in 1..half {
            acc += 2.0 * (k as f64).powi(order as i32) * deriv_cos(c, s, order);
            let c_next = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = c_next;
        }
        acc += (half as f64).powi(order as i32) * deriv_cos(c, s, order);
        acc / n
    }

    /// Matrix mapping node values to the `order`-th derivative at the given points.
    pub fn eval_matrix(&self, points: &[f64], order: u32) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = points.iter().map(|&t| self.cardinal_row(t, order)).collect();
        DMatrix::from_fn(points.len(), self.n, |i, j| rows[i][j])
    }

    /// Differentiation matrix at the nodes themselves (closed-form circulant entries
    /// for orders 1 and 2).
    pub fn diff_matrix(&self, order: u32) -> DMatrix<f64> {
        let n = self.n;
        let h = self.step();
        let entry = |k: usize| -> f64 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let x = 0.5 * k as f64 * h;
            match (order, k) {
                (1, 0) => 0.0,
                (1, _) => 0.5 * sign * x.cos() / x.sin(),
                (2, 0) => -PI * PI / (3.0 * h * h) - 1.0 / 6.0,
                (2, _) => -0.5 * sign / (x.sin() * x.sin()),
                _ => unreachable!(),
            }
        };
        if order == 0 {
            return DMatrix::identity(n, n);
        }
        if order > 2 {
            return self.eval_matrix(&self.nodes(), order);
        }
        let col: Vec<f64> = (0..n).map(entry).collect();
        DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n])
    }

    pub fn interpolate(&self, values: &[f64], theta: f64, order: u32) -> f64 {
        self.cardinal_row(theta, order)
            .iter()
            .zip(values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Derivative of cos(x) of the given order, from (cos x, sin x).
fn deriv_cos(c: f64, s: f64, order: u32) -> f64 {
    match order % 4 {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    }
}

/// Weights of Fejer's first rule on `m` points `theta_j = pi*(j+1/2)/m` for integrands of the form
/// `G = g(theta) sin(theta)` over `[0, pi]`, exact when `g` is a cosine polynomial of degree < m.
/// The returned weights multiply `G` directly.
pub fn fejer_weights_over_sin(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let th = PI * (j as f64 + 0.5) / m as f64;
            let mut s = 0.0;
            for k in 1..=(m / 2) {
                let kf = k as f64;
                s += (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
            (2.0 / m as f64) * (1.0 - 2.0 * s) / th.sin()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_trig_polynomials_exactly() {
        let b = TrigBasis::new(32, 0.3);
        let x = b.nodes();
        let f: Vec<f64> = x.iter().map(|t| (3.0 * t).sin() + 0.5 * (7.0 * t).cos()).collect();
        let d1 = b.diff_matrix(1) * nalgebra::DVector::from_vec(f.clone());
        let d2 = b.diff_matrix(2) * nalgebra::DVector::from_vec(f);
        for (j, t) in x.iter().enumerate() {
            let e1 = 3.0 * (3.0 * t).cos() - 3.5 * (7.0 * t).sin();
            let e2 = -9.0 * (3.0 * t).sin() - 24.5 * (7.0 * t).cos();
            assert!((d1[j] - e1).abs() < 1e-11);
            assert!((d2[j] - e2).abs() < 1e-10);
        }
    }

    #[test]
    fn nyquist_mode_has_no_first_derivative_at_nodes() {
        let b = TrigBasis::new(16, 0.0);
        let f: Vec<f64> = (0..16).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d1 = b.diff_matrix(1) * nalgebra::DVector::from_vec(f.clone());
        let d2 = b.diff_matrix(2) * nalgebra::DVector::from_vec(f.clone());
        assert!(d1.amax() < 1e-12);
        assert!((d2[0] + 64.0).abs() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_off_grid_values() {
        let b = TrigBasis::new(24, 0.0);
        let f: Vec<f64> = b.nodes().iter().map(|t| (2.0 * t).cos() + t.sin()).collect();
        let t = 0.123;
        assert!((b.interpolate(&f, t, 0) - ((2.0 * t).cos() + t.sin())).abs() < 1e-13);
    }

    #[test]
    fn fejer_integrates_legendre_products() {
        let m = 16;
        let w = fejer_weights_over_sin(m);
        // integral over the sphere profile of cos^2: int_0^pi cos^2 sin = 2/3
        let s: f64 = (0..m)
            .map(|j| {
                let th = PI * (j as f64 + 0.5) / m as f64;
                w[j] * th.sin() * th.cos().powi(2)
            })
            .sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-14);
    }
}
