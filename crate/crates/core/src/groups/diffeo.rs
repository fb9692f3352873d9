//! Fourier-truncated circle diffeomorphisms `phi(theta) = theta + f(theta)`.
//!
//! Coefficient layout (shared by points and algebra vectors), length `2N + 1`:
//! `[a0, a1, b1, a2, b2, ..., aN, bN]` for
//! `f = a0 + sum_k a_k cos(k theta) + b_k sin(k theta)`.
//!
//! Products and flows are evaluated pointwise on a uniform grid of `4N`
//! nodes and projected back to modes `<= N`. Products of two retained
//! fields project without aliasing.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use std::sync::Arc;

const NEWTON_ITERS: usize = 50;

#[derive(Clone, Debug)]
pub struct DiffeoModel {
    n: usize,
    grid: Arc<Vec<f64>>,
}

impl DiffeoModel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("mode cutoff must be positive".into()));
        }
        let g = 4 * n;
        let grid = (0..g).map(|j| 2.0 * PI * j as f64 / g as f64).collect();
        Ok(DiffeoModel { n, grid: Arc::new(grid) })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn eval(&self, c: &DVector<f64>, theta: f64) -> f64 {
        let mut v = c[0];
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut co) = (s1, c1);
        for k in 1..=self.n {
            v += c[2 * k - 1] * co + c[2 * k] * s;
            let ns = s * c1 + co * s1;
            co = co * c1 - s * s1;
            s = ns;
        }
        v
    }

    pub fn eval_deriv(&self, c: &DVector<f64>, theta: f64) -> f64 {
        let mut v = 0.0;
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut co) = (s1, c1);
        for k in 1..=self.n {
            v += k as f64 * (c[2 * k] * co - c[2 * k - 1] * s);
            let ns = s * c1 + co * s1;
            co = co * c1 - s * s1;
            s = ns;
        }
        v
    }

    pub fn values(&self, c: &DVector<f64>) -> Vec<f64> {
        self.grid.iter().map(|&t| self.eval(c, t)).collect()
    }

    pub fn derivative_values(&self, c: &DVector<f64>) -> Vec<f64> {
        self.grid.iter().map(|&t| self.eval_deriv(c, t)).collect()
    }

    /// Discrete Fourier projection of grid values onto modes `<= N`.
    pub fn project(&self, values: &[f64]) -> DVector<f64> {
        let g = self.grid.len() as f64;
        let mut c = DVector::zeros(self.dim());
        for (&t, &v) in self.grid.iter().zip(values) {
            c[0] += v / g;
            for k in 1..=self.n {
                let (s, co) = (k as f64 * t).sin_cos();
                c[2 * k - 1] += 2.0 * v * co / g;
                c[2 * k] += 2.0 * v * s / g;
            }
        }
        c
    }

    /// Coefficients of the derivative.
    pub fn differentiate(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut d = DVector::zeros(self.dim());
        for k in 1..=self.n {
            let kf = k as f64;
            d[2 * k - 1] = kf * c[2 * k];
            d[2 * k] = -kf * c[2 * k - 1];
        }
        d
    }

    pub fn min_derivative(&self, c: &DVector<f64>) -> f64 {
        self.derivative_values(c).iter().fold(f64::INFINITY, |m, &d| m.min(1.0 + d))
    }

    pub fn check(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.dim() {
            return Err(Error::ModelMismatch(format!(
                "expected {} Fourier coefficients, got {}",
                self.dim(),
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotADiffeomorphism { min_derivative: f64::NAN });
        }
        let m = self.min_derivative(c);
        if m <= 0.0 {
            return Err(Error::NotADiffeomorphism { min_derivative: m });
        }
        Ok(())
    }

    /// `phi o psi`.
    pub fn compose(&self, phi: &DVector<f64>, psi: &DVector<f64>) -> Result<DVector<f64>> {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .map(|&t| {
                let fp = self.eval(psi, t);
                fp + self.eval(phi, t + fp)
            })
            .collect();
        let c = self.project(&vals);
        self.check(&c)?;
        Ok(c)
    }

    pub fn inverse(&self, phi: &DVector<f64>) -> Result<DVector<f64>> {
        let mut vals = Vec::with_capacity(self.grid.len());
        for &t in self.grid.iter() {
            let mut x = t - self.eval(phi, t);
            let mut done = false;
            for _ in 0..NEWTON_ITERS {
                let r = x + self.eval(phi, x) - t;
                let d = 1.0 + self.eval_deriv(phi, x);
                if d <= 0.0 || !d.is_finite() {
                    break;
                }
                x -= r / d;
                if r.abs() < 1e-15 * (1.0 + t.abs()) {
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(Error::NotInvertible(format!("Newton iteration did not converge at theta = {t}")));
            }
            vals.push(x - t);
        }
        let c = self.project(&vals);
        self.check(&c)?;
        Ok(c)
    }

    /// Composition `u o phi` of a field with a diffeomorphism, projected.
    pub fn field_after(&self, u: &DVector<f64>, phi: &DVector<f64>) -> DVector<f64> {
        let vals: Vec<f64> = self.grid.iter().map(|&t| self.eval(u, t + self.eval(phi, t))).collect();
        self.project(&vals)
    }

    /// Pointwise product of two fields, projected (alias-free for retained modes).
    pub fn product(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let a = self.values(u);
        let b = self.values(v);
        let vals: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        self.project(&vals)
    }

    /// Time-one flow of the field `u`, as a diffeomorphism.
    pub fn flow(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let lip = self.derivative_values(u).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let steps = (8.0 * (1.0 + lip)).ceil() as usize;
        let h = 1.0 / steps as f64;
        let mut vals = Vec::with_capacity(self.grid.len());
        for &t in self.grid.iter() {
            let mut x = t;
            for _ in 0..steps {
                let k1 = self.eval(u, x);
                let k2 = self.eval(u, x + 0.5 * h * k1);
                let k3 = self.eval(u, x + 0.5 * h * k2);
                let k4 = self.eval(u, x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            if !x.is_finite() {
                return Err(Error::FlowDiverged(format!("flow left the finite range at theta = {t}")));
            }
            vals.push(x - t);
        }
        let c = self.project(&vals);
        self.check(&c)?;
        Ok(c)
    }

    /// `[u, v] = u' v - u v'`.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let du = self.differentiate(u);
        let dv = self.differentiate(v);
        self.product(&du, v) - self.product(u, &dv)
    }

    /// Columns are the projected fields `e_i o phi`; maps a right-trivialized
    /// velocity to the chart velocity.
    pub fn velocity_matrix(&self, phi: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let pts: Vec<f64> = self.grid.iter().map(|&t| t + self.eval(phi, t)).collect();
        let mut m = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        for i in 0..d {
            e.fill(0.0);
            e[i] = 1.0;
            let vals: Vec<f64> = pts.iter().map(|&x| self.eval(&e, x)).collect();
            m.set_column(i, &self.project(&vals));
        }
        m
    }

    /// `L^2(0, 2 pi)` Gram weights of the coefficient basis.
    pub fn l2_weights(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| if i == 0 { 2.0 * PI } else { PI })
    }

    /// Mode number of coefficient slot `i`.
    pub fn mode_of(i: usize) -> usize {
        i.div_ceil(2)
    }
}
