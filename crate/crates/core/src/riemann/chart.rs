//! Chart representation of a right-invariant metric and the Lagrangian form
//! of the geodesic equation.
//!
//! In the chart `kappa` at `e` the metric matrix is `G(z) = T(z)^T A T(z)`.
//! The Euler-Lagrange equations of `1/2 zdot^T G(z) zdot` read
//! `zddot = Gamma_z(zdot, zdot)` with
//! `G Gamma(X, X) = 1/2 (X^T d_j G X)_j - (dG(X) X)`.

use super::Metric;
use crate::error::{Error, Result};
use crate::groups::{AlgebraVector, GroupModel, GroupPoint};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Relative finite-difference step; the absolute step at `z` is `h (1 + |z|)`.
pub const DEFAULT_CHART_STEP: f64 = 1e-4;

/// Charts at `x` are `y -> kappa(y x^-1)` with inverse `v -> tau(v) x`.
#[derive(Clone, Debug)]
pub struct ChartAtlas {
    pub model: GroupModel,
    pub step: f64,
    /// The Lagrangian integrator re-centers once `|z|` exceeds this.
    pub recenter_radius: f64,
}

impl ChartAtlas {
    pub fn new(model: GroupModel) -> Self {
        ChartAtlas { model, step: DEFAULT_CHART_STEP, recenter_radius: 1.0 }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn chart_at(&self, center: &GroupPoint, y: &GroupPoint) -> Result<DVector<f64>> {
        self.model.chart(&self.model.multiply(y, &self.model.inverse(center)?)?)
    }

    pub fn inv_chart_at(&self, center: &GroupPoint, v: &DVector<f64>) -> Result<GroupPoint> {
        self.model.multiply(&self.model.chart_inv(v)?, center)
    }

    /// Largest `|kappa_x(tau_x(v)) - v|` over seeded samples of the given
    /// radius, with `x = e` unless `translated` is set. Translated charts of
    /// truncated diffeomorphisms are only exact up to the truncation error.
    pub fn roundtrip_residual(&self, samples: usize, radius: f64, seed: u64, translated: bool) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let center = if translated { self.model.sample(&mut rng, radius) } else { self.model.identity() };
            let v = self.model.sample_algebra(&mut rng, radius);
            let back = self.chart_at(&center, &self.inv_chart_at(&center, &v)?)?;
            worst = worst.max((back - v).amax());
        }
        Ok(worst)
    }

    /// Absolute finite-difference step at `z`.
    pub fn step_at(&self, z: &DVector<f64>) -> f64 {
        self.step * (1.0 + z.norm())
    }

    fn inside(&self, z: &DVector<f64>) -> Result<()> {
        match &self.model {
            GroupModel::Rotation(3) if z.norm() >= PI => Err(Error::ChartBoundary(format!("|z| = {} reaches pi", z.norm()))),
            GroupModel::FourierDiffeo(d) => {
                let m = d.min_derivative(z);
                if m > 0.0 {
                    Ok(())
                } else {
                    Err(Error::ChartBoundary(format!("1 + f' reaches {m:e}")))
                }
            }
            _ => Ok(()),
        }
    }

    /// `G(z)` with boundary errors mapped to `ChartBoundary`.
    fn metric_matrix(&self, metric: &Metric, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.inside(z)?;
        metric.chart_metric(z).map_err(|e| match e {
            Error::NotInvertible(m) => Error::ChartBoundary(m),
            Error::NotADiffeomorphism { min_derivative } => Error::ChartBoundary(format!("1 + f' reaches {min_derivative:e}")),
            other => other,
        })
    }

    /// `G(z)` and its partial derivatives `d_i G(z)` (fourth-order stencil).
    fn metric_jet(&self, metric: &Metric, z: &DVector<f64>, h: f64) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let g = self.metric_matrix(metric, z)?;
        let n = z.len();
        let mut dg = Vec::with_capacity(n);
        for i in 0..n {
            let at = |s: f64| -> Result<DMatrix<f64>> {
                let mut w = z.clone();
                w[i] += s;
                self.metric_matrix(metric, &w).map_err(|e| match e {
                    Error::ChartBoundary(_) => Error::ChartBoundary(format!("stencil exits the chart along axis {i}")),
                    other => other,
                })
            };
            let d = ((at(h)? - at(-h)?) * 8.0 - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h);
            dg.push(d);
        }
        Ok((g, dg))
    }
}

fn quadratic_gamma(g: &DMatrix<f64>, dg: &[DMatrix<f64>], x: &DVector<f64>) -> Result<DVector<f64>> {
    let n = x.len();
    let mut dgx = DMatrix::zeros(n, n);
    for (i, d) in dg.iter().enumerate() {
        dgx += d * x[i];
    }
    let half = DVector::from_fn(n, |j, _| 0.5 * (&dg[j] * x).dot(x));
    let r = half - dgx * x;
    g.clone()
        .cholesky()
        .map(|c| c.solve(&r))
        .ok_or_else(|| Error::SingularInertia("chart metric is not positive definite".into()))
}

/// `Gamma_z(X, Y)` in the chart at `e`, where `z = kappa(x)`, by central
/// differences of `G` and polarization. `h = None` uses the atlas step.
pub fn christoffel_fd(
    metric: &Metric,
    atlas: &ChartAtlas,
    x: &GroupPoint,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
    h: Option<f64>,
) -> Result<DVector<f64>> {
    let z = atlas.model.chart(x)?;
    christoffel_at(metric, atlas, &z, xv, yv, h)
}

/// [`christoffel_fd`] at chart coordinates `z`.
pub fn christoffel_at(
    metric: &Metric,
    atlas: &ChartAtlas,
    z: &DVector<f64>,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
    h: Option<f64>,
) -> Result<DVector<f64>> {
    let m = &atlas.model;
    m.check_algebra(z)?;
    m.check_algebra(xv)?;
    m.check_algebra(yv)?;
    let h = h.unwrap_or_else(|| atlas.step_at(z));
    let (g, dg) = atlas.metric_jet(metric, z, h)?;
    let p = quadratic_gamma(&g, &dg, &(xv + yv))?;
    let q = quadratic_gamma(&g, &dg, &(xv - yv))?;
    Ok((p - q) * 0.25)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSample {
    pub t: f64,
    pub g: GroupPoint,
    /// Right-trivialized velocity `T(z) zdot`.
    pub u: AlgebraVector,
}

/// Integrates `zddot = Gamma_z(zdot, zdot)` with classical RK4 from
/// `z = kappa(x)`, `zdot = xdot`, re-centering the chart by right translation
/// whenever `|z|` exceeds the atlas radius. Samples are taken every `h`.
pub fn lagrangian_step(
    metric: &Metric,
    atlas: &ChartAtlas,
    x: &GroupPoint,
    xdot: &DVector<f64>,
    t_end: f64,
    h: f64,
) -> Result<Vec<LagrangianSample>> {
    let m = &atlas.model;
    m.check(x)?;
    m.check_algebra(xdot)?;
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::StepRejected(format!("invalid step {h} or horizon {t_end}")));
    }
    let steps = (t_end / h).round() as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { h };
    let ceiling = 1e6;

    let mut center = m.identity();
    let mut z = m.chart(x)?;
    let mut zd = xdot.clone();
    let accel = |z: &DVector<f64>, zd: &DVector<f64>| -> Result<DVector<f64>> {
        let hz = atlas.step_at(z);
        let (g, dg) = atlas.metric_jet(metric, z, hz)?;
        quadratic_gamma(&g, &dg, zd)
    };
    let sample = |t: f64, center: &GroupPoint, z: &DVector<f64>, zd: &DVector<f64>| -> Result<LagrangianSample> {
        Ok(LagrangianSample { t, g: atlas.inv_chart_at(center, z)?, u: m.trivialization(z)? * zd })
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(sample(0.0, &center, &z, &zd)?);
    for i in 0..steps {
        if z.norm() > atlas.recenter_radius {
            let u = m.trivialization(&z)? * &zd;
            center = atlas.inv_chart_at(&center, &z)?;
            z = DVector::zeros(z.len());
            zd = u;
        }
        let k1z = zd.clone();
        let k1v = accel(&z, &zd)?;
        let k2z = &zd + &k1v * (0.5 * h);
        let k2v = accel(&(&z + &k1z * (0.5 * h)), &k2z)?;
        let k3z = &zd + &k2v * (0.5 * h);
        let k3v = accel(&(&z + &k2z * (0.5 * h)), &k3z)?;
        let k4z = &zd + &k3v * h;
        let k4v = accel(&(&z + &k3z * h), &k4z)?;
        z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0);
        zd += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let s = sample((i + 1) as f64 * h, &center, &z, &zd)?;
        let norm = metric.norm(&s.u);
        if !norm.is_finite() || norm > ceiling {
            return Err(Error::BlowUp { t: s.t, norm, ceiling });
        }
        out.push(s);
    }
    Ok(out)
}
