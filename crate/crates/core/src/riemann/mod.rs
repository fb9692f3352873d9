//! Right-invariant metrics given by an inertia operator on the algebra.
//!
//! The metric at `g` is `<A u, v>` for the right-trivialized velocities
//! `u = (T_e mu^g)^-1 gdot`. With the flow bracket of [`crate::groups`],
//! geodesics satisfy the Euler-Arnold equation `u_t = -ad_u^T u`, where
//! `<A ad_u^T w, v> = <A w, [u, v]>`.

pub mod chart;
pub mod noloss;
pub mod shoot;

pub use chart::{christoffel_fd, lagrangian_step, ChartAtlas, LagrangianSample, DEFAULT_CHART_STEP};
pub use noloss::{no_loss_no_gain_check, Checkpoint, NoLossReport};
pub use shoot::{shoot, shoot_adaptive, shoot_with, trajectory_csv, AdaptiveRun, GeodesicState, ShootOptions, Trajectory};

use crate::error::{Error, Result};
use crate::groups::{AlgebraVector, DiffeoModel, GroupModel, GroupPoint};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Inertia {
    /// Symmetric positive-definite matrix acting on algebra coordinates.
    Dense(DMatrix<f64>),
    /// Fourier multiplier `(1 + n^2)^s` on circle vector fields.
    Sobolev { s: f64 },
}

#[derive(Clone, Debug)]
pub struct Metric {
    model: GroupModel,
    inertia: Inertia,
    /// Gram matrix of the inner product in algebra coordinates.
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    /// Diagonal of the Sobolev multiplier, if any.
    multiplier: Option<DVector<f64>>,
    min_eigenvalue: f64,
}

impl Metric {
    pub fn new(model: GroupModel, a: DMatrix<f64>) -> Result<Self> {
        let n = model.algebra_dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("inertia must be {n} x {n}")));
        }
        if matches!(model, GroupModel::FourierDiffeo(_)) {
            return Err(Error::InvalidInput("circle diffeomorphisms take a Sobolev inertia".into()));
        }
        if (&a - a.transpose()).amax() > 1e-12 {
            return Err(Error::SingularInertia("inertia operator is not symmetric".into()));
        }
        let min = a.clone().symmetric_eigenvalues().min();
        if !(min > 0.0) {
            return Err(Error::SingularInertia(format!("smallest eigenvalue {min} is not positive")));
        }
        let gram_inv = a.clone().try_inverse().ok_or_else(|| Error::SingularInertia("not invertible".into()))?;
        Ok(Metric { model, gram: a.clone(), gram_inv, inertia: Inertia::Dense(a), multiplier: None, min_eigenvalue: min })
    }

    /// `A = I` in algebra coordinates (bi-invariant on SO(3)).
    pub fn identity(model: GroupModel) -> Result<Self> {
        let n = model.algebra_dim();
        Self::new(model, DMatrix::identity(n, n))
    }

    pub fn diagonal(model: GroupModel, d: &[f64]) -> Result<Self> {
        Self::new(model, DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// `(1 - Delta)^s` with the plain `L^2(0, 2 pi)` pairing.
    pub fn sobolev(model: GroupModel, s: f64) -> Result<Self> {
        let d = match &model {
            GroupModel::FourierDiffeo(d) => d.clone(),
            _ => return Err(Error::InvalidInput("Sobolev inertia needs a circle diffeomorphism model".into())),
        };
        if !(s >= 0.0) {
            return Err(Error::InvalidInput("Sobolev order must be nonnegative".into()));
        }
        let mult = DVector::from_fn(d.dim(), |i, _| (1.0 + (DiffeoModel::mode_of(i) as f64).powi(2)).powf(s));
        let w = d.l2_weights();
        let diag = w.component_mul(&mult);
        let gram = DMatrix::from_diagonal(&diag);
        let gram_inv = DMatrix::from_diagonal(&diag.map(|x| 1.0 / x));
        Ok(Metric { model, gram, gram_inv, inertia: Inertia::Sobolev { s }, multiplier: Some(mult), min_eigenvalue: 1.0 })
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn inertia(&self) -> &Inertia {
        &self.inertia
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// Smallest eigenvalue of the inertia operator (1 for Sobolev multipliers).
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn inner(&self, u: &AlgebraVector, v: &AlgebraVector) -> f64 {
        (&self.gram * v).dot(u)
    }

    pub fn energy(&self, u: &AlgebraVector) -> f64 {
        self.inner(u, u)
    }

    pub fn norm(&self, u: &AlgebraVector) -> f64 {
        self.energy(u).max(0.0).sqrt()
    }

    /// Metric at `x` on right-trivialized tangent vectors; independent of `x`.
    pub fn metric_eval(&self, x: &GroupPoint, v: &AlgebraVector, w: &AlgebraVector) -> Result<f64> {
        self.model.check(x)?;
        self.model.check_algebra(v)?;
        self.model.check_algebra(w)?;
        Ok(self.inner(v, w))
    }

    /// `ad_u^T w`, defined by `<A ad_u^T w, v> = <A w, [u, v]>` for all `v`.
    pub fn ad_transpose(&self, u: &AlgebraVector, w: &AlgebraVector) -> Result<AlgebraVector> {
        self.model.check_algebra(u)?;
        self.model.check_algebra(w)?;
        match (&self.model, &self.multiplier) {
            (GroupModel::FourierDiffeo(d), Some(mult)) => {
                // <m, u'v - uv'> = <2u'm + um', v> after integrating by parts.
                let m = w.component_mul(mult);
                let du = d.differentiate(u);
                let dm = d.differentiate(&m);
                let q = d.product(&du, &m) * 2.0 + d.product(u, &dm);
                Ok(q.component_div(mult))
            }
            _ => {
                let ad = self.model.ad_matrix(u)?;
                Ok(&self.gram_inv * (ad.transpose() * (&self.gram * w)))
            }
        }
    }

    /// Right-hand side of the Euler-Arnold equation, `-ad_u^T u`.
    pub fn euler_arnold(&self, u: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(-self.ad_transpose(u, u)?)
    }

    /// Metric matrix in the chart at `e`: `T(z)^T G T(z)`.
    pub fn chart_metric(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let t = self.model.trivialization(z)?;
        Ok(t.transpose() * &self.gram * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_body_ad_transpose() {
        let m = Metric::diagonal(GroupModel::so3(), &[1.0, 2.0, 3.0]).unwrap();
        let u = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let z = m.ad_transpose(&u, &u).unwrap();
        assert!((z - DVector::from_vec(vec![0.0, 0.0, -1.0 / 3.0])).amax() < 1e-15);
        for i in 0..3 {
            let mut v = DVector::zeros(3);
            v[i] = 1.0;
            let lhs = m.inner(&m.ad_transpose(&u, &u).unwrap(), &v);
            let rhs = m.inner(&u, &GroupModel::so3().bracket(&u, &v).unwrap());
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn bi_invariant_ad_transpose_vanishes() {
        let m = Metric::identity(GroupModel::so3()).unwrap();
        let u = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        assert!(m.ad_transpose(&u, &u).unwrap().amax() < 1e-15);
    }

    #[test]
    fn sobolev_norm_of_cosine() {
        let model = GroupModel::fourier_diffeo(4).unwrap();
        let m = Metric::sobolev(model.clone(), 1.0).unwrap();
        let mut u = DVector::zeros(9);
        u[1] = 1.0;
        let e = model.identity();
        assert!((m.metric_eval(&e, &u, &u).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(m.metric_eval(&e, &DVector::zeros(9), &u).unwrap(), 0.0);
    }

    #[test]
    fn spectral_ad_transpose_of_cosine() {
        let model = GroupModel::fourier_diffeo(4).unwrap();
        let m = Metric::sobolev(model, 1.0).unwrap();
        let mut u = DVector::zeros(9);
        u[1] = 1.0;
        let z = m.ad_transpose(&u, &u).unwrap();
        let mut expected = DVector::zeros(9);
        expected[4] = -0.6; // sin(2 theta)
        assert!((z - expected).amax() < 1e-14);
    }

    #[test]
    fn rejects_bad_inertia() {
        let asym = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(Metric::new(GroupModel::so3(), asym), Err(Error::SingularInertia(_))));
        assert!(Metric::diagonal(GroupModel::so3(), &[1.0, 0.0, 1.0]).is_err());
    }
}
