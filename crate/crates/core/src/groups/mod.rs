//! Desk-scale group models: rotation groups, vector groups, right
//! semidirect products, Fourier-truncated circle diffeomorphisms and
//! extension groups.
//!
//! Conventions used throughout:
//!
//! * The right-invariant field of `X` is `R_X(g) = d/ds exp(sX) g`, and
//!   [`GroupModel::exp`] is the time-one flow of `R_X` through `e`.
//! * [`GroupModel::bracket`] is the flow bracket
//!   `[X, Y] = -d/dt (Fl_t^{R_X})^* R_Y (e)`. On matrix groups this is the
//!   commutator `XY - YX`; on circle diffeomorphisms it is `u' v - u v'`;
//!   on `G x_rho H` it is `([a, b], d rho(a) w - d rho(b) v)` for
//!   `X = (a, v)`, `Y = (b, w)`.
//! * Every model carries a chart `kappa` around `e` with `kappa(e) = 0`
//!   and `d kappa_e = id`, so algebra coordinates and chart coordinates
//!   agree at the identity.

pub mod decay;
pub mod diffeo;
pub mod evolve;
pub mod extension;
pub mod rotation;
pub mod semidirect;

pub use decay::{regularity_decay, DecayFit};
pub use diffeo::DiffeoModel;
pub use evolve::{
    bracket_flow_study, bracket_via_flows, evolve, evolve_with, BracketStudy, ControlPath, ControlPathRecord,
    EvolveMethod, Interpolation,
};
pub use extension::{validate_extension_datum, ExtensionDatum, ExtensionModel, ValidationReport};
pub use semidirect::{Representation, SemidirectModel};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type AlgebraVector = DVector<f64>;

#[derive(Clone, Debug, PartialEq)]
pub enum GroupPoint {
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
    /// `(g, h)` in a semidirect product or `(x, m)` in an extension.
    Pair(Box<GroupPoint>, Box<GroupPoint>),
    /// Fourier coefficients of `f` in `phi = id + f`.
    Diffeo(DVector<f64>),
}

impl GroupPoint {
    pub fn pair(a: GroupPoint, b: GroupPoint) -> Self {
        GroupPoint::Pair(Box::new(a), Box::new(b))
    }

    pub fn vector(v: &[f64]) -> Self {
        GroupPoint::Vector(DVector::from_column_slice(v))
    }

    /// All stored numbers in a fixed order (matrices row-major).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            GroupPoint::Matrix(m) => m.transpose().as_slice().to_vec(),
            GroupPoint::Vector(v) | GroupPoint::Diffeo(v) => v.as_slice().to_vec(),
            GroupPoint::Pair(a, b) => {
                let mut c = a.coords();
                c.extend(b.coords());
                c
            }
        }
    }

    /// Largest coordinate difference; infinite when the shapes differ.
    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        let (a, b) = (self.coords(), other.coords());
        if a.len() != b.len() || std::mem::discriminant(self) != std::mem::discriminant(other) {
            return f64::INFINITY;
        }
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn split(&self) -> Result<(&GroupPoint, &GroupPoint)> {
        match self {
            GroupPoint::Pair(a, b) => Ok((a, b)),
            other => Err(Error::ModelMismatch(format!("expected a pair point, got {}", other.kind()))),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            GroupPoint::Matrix(_) => "matrix",
            GroupPoint::Vector(_) => "vector",
            GroupPoint::Pair(..) => "pair",
            GroupPoint::Diffeo(_) => "diffeo",
        }
    }
}

/// Serialized form of a [`GroupPoint`], keyed by variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PointRecord {
    Matrix { rows: usize, cols: usize, entries: Vec<f64> },
    Vector { coords: Vec<f64> },
    Pair { first: Box<PointRecord>, second: Box<PointRecord> },
    Diffeo { coeffs: Vec<f64> },
}

impl From<&GroupPoint> for PointRecord {
    fn from(p: &GroupPoint) -> Self {
        match p {
            GroupPoint::Matrix(m) => PointRecord::Matrix { rows: m.nrows(), cols: m.ncols(), entries: p.coords() },
            GroupPoint::Vector(v) => PointRecord::Vector { coords: v.as_slice().to_vec() },
            GroupPoint::Pair(a, b) => PointRecord::Pair {
                first: Box::new(a.as_ref().into()),
                second: Box::new(b.as_ref().into()),
            },
            GroupPoint::Diffeo(c) => PointRecord::Diffeo { coeffs: c.as_slice().to_vec() },
        }
    }
}

impl TryFrom<&PointRecord> for GroupPoint {
    type Error = Error;
    fn try_from(r: &PointRecord) -> Result<Self> {
        Ok(match r {
            PointRecord::Matrix { rows, cols, entries } => {
                if entries.len() != rows * cols {
                    return Err(Error::InvalidInput("matrix record has wrong entry count".into()));
                }
                GroupPoint::Matrix(DMatrix::from_row_slice(*rows, *cols, entries))
            }
            PointRecord::Vector { coords } => GroupPoint::vector(coords),
            PointRecord::Pair { first, second } => {
                GroupPoint::pair(first.as_ref().try_into()?, second.as_ref().try_into()?)
            }
            PointRecord::Diffeo { coeffs } => GroupPoint::Diffeo(DVector::from_column_slice(coeffs)),
        })
    }
}

#[derive(Clone, Debug)]
pub enum GroupModel {
    /// SO(n) for n = 2, 3.
    Rotation(usize),
    /// Additive `R^n`.
    Euclidean(usize),
    Semidirect(Arc<SemidirectModel>),
    FourierDiffeo(DiffeoModel),
    Extension(Arc<ExtensionModel>),
}

const RK_CHART_STEPS: usize = 32;
const FD_STEP: f64 = 1e-3;
const BRACKET_FD_STEP: f64 = 1e-2;

fn mismatch(what: &str) -> Error {
    Error::ModelMismatch(what.to_string())
}

fn as_matrix(p: &GroupPoint) -> Result<&DMatrix<f64>> {
    match p {
        GroupPoint::Matrix(m) => Ok(m),
        other => Err(mismatch(&format!("expected a matrix point, got {}", other.kind()))),
    }
}

fn as_vector(p: &GroupPoint) -> Result<&DVector<f64>> {
    match p {
        GroupPoint::Vector(v) => Ok(v),
        other => Err(mismatch(&format!("expected a vector point, got {}", other.kind()))),
    }
}

fn as_diffeo(p: &GroupPoint) -> Result<&DVector<f64>> {
    match p {
        GroupPoint::Diffeo(v) => Ok(v),
        other => Err(mismatch(&format!("expected a diffeo point, got {}", other.kind()))),
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn gaussian_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<f64> {
    let mut v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    let r: f64 = rng.random();
    v * (radius * r.powf(1.0 / dim as f64))
}

impl GroupModel {
    pub fn so2() -> Self {
        GroupModel::Rotation(2)
    }

    pub fn so3() -> Self {
        GroupModel::Rotation(3)
    }

    pub fn euclidean(n: usize) -> Self {
        GroupModel::Euclidean(n)
    }

    pub fn semidirect(base: GroupModel, rep: Representation) -> Result<Self> {
        Ok(GroupModel::Semidirect(Arc::new(SemidirectModel::new(base, rep)?)))
    }

    /// `SO(n) x R^n` with the defining representation.
    pub fn special_euclidean(n: usize) -> Self {
        GroupModel::semidirect(GroupModel::Rotation(n), Representation::rotation(n)).expect("valid model")
    }

    pub fn fourier_diffeo(n: usize) -> Result<Self> {
        Ok(GroupModel::FourierDiffeo(DiffeoModel::new(n)?))
    }

    pub fn extension(base: GroupModel, fiber: GroupModel, datum: ExtensionDatum) -> Self {
        GroupModel::Extension(Arc::new(ExtensionModel::new(base, fiber, datum)))
    }

    /// Heisenberg group as the central extension of `R^2` by `R`.
    pub fn heisenberg() -> Self {
        GroupModel::extension(GroupModel::Euclidean(2), GroupModel::Euclidean(1), ExtensionDatum::heisenberg())
    }

    pub fn name(&self) -> String {
        match self {
            GroupModel::Rotation(n) => format!("SO({n})"),
            GroupModel::Euclidean(n) => format!("R^{n}"),
            GroupModel::Semidirect(s) => format!("{} x_{} R^{}", s.base.name(), s.rep.name, s.fiber_dim()),
            GroupModel::FourierDiffeo(d) => format!("Diff_N{}(S1)", d.modes()),
            GroupModel::Extension(e) => format!("E({}, {}; {})", e.base.name(), e.fiber.name(), e.datum.name),
        }
    }

    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupModel::Rotation(n) => rotation::algebra_dim(*n),
            GroupModel::Euclidean(n) => *n,
            GroupModel::Semidirect(s) => s.base_dim() + s.fiber_dim(),
            GroupModel::FourierDiffeo(d) => d.dim(),
            GroupModel::Extension(e) => e.base.algebra_dim() + e.fiber.algebra_dim(),
        }
    }

    pub fn identity(&self) -> GroupPoint {
        match self {
            GroupModel::Rotation(n) => GroupPoint::Matrix(DMatrix::identity(*n, *n)),
            GroupModel::Euclidean(n) => GroupPoint::Vector(DVector::zeros(*n)),
            GroupModel::Semidirect(s) => {
                GroupPoint::pair(s.base.identity(), GroupPoint::Vector(DVector::zeros(s.fiber_dim())))
            }
            GroupModel::FourierDiffeo(d) => GroupPoint::Diffeo(DVector::zeros(d.dim())),
            GroupModel::Extension(e) => GroupPoint::pair(e.base.identity(), e.fiber.identity()),
        }
    }

    /// Shape and membership test.
    pub fn check(&self, p: &GroupPoint) -> Result<()> {
        match self {
            GroupModel::Rotation(n) => {
                let m = as_matrix(p)?;
                if m.nrows() != *n || !rotation::is_rotation(m, 1e-9) {
                    return Err(mismatch(&format!("not an element of SO({n})")));
                }
                Ok(())
            }
            GroupModel::Euclidean(n) => {
                if as_vector(p)?.len() != *n {
                    return Err(mismatch(&format!("expected a vector of length {n}")));
                }
                Ok(())
            }
            GroupModel::Semidirect(s) => {
                let (g, h) = p.split()?;
                s.base.check(g)?;
                if as_vector(h)?.len() != s.fiber_dim() {
                    return Err(mismatch("fiber dimension"));
                }
                Ok(())
            }
            GroupModel::FourierDiffeo(d) => d.check(as_diffeo(p)?),
            GroupModel::Extension(e) => {
                let (x, m) = p.split()?;
                e.base.check(x)?;
                e.fiber.check(m)
            }
        }
    }

    pub fn check_algebra(&self, v: &AlgebraVector) -> Result<()> {
        if v.len() != self.algebra_dim() {
            return Err(mismatch(&format!(
                "algebra vector of length {} for {} (dimension {})",
                v.len(),
                self.name(),
                self.algebra_dim()
            )));
        }
        Ok(())
    }

    pub fn multiply(&self, a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
        match self {
            GroupModel::Rotation(n) => {
                let (x, y) = (as_matrix(a)?, as_matrix(b)?);
                if x.nrows() != *n || y.nrows() != *n {
                    return Err(mismatch("rotation matrix size"));
                }
                Ok(GroupPoint::Matrix(x * y))
            }
            GroupModel::Euclidean(n) => {
                let (x, y) = (as_vector(a)?, as_vector(b)?);
                if x.len() != *n || y.len() != *n {
                    return Err(mismatch("vector length"));
                }
                Ok(GroupPoint::Vector(x + y))
            }
            GroupModel::Semidirect(s) => {
                let (g1, h1) = a.split()?;
                let (g2, h2) = b.split()?;
                let g = s.base.multiply(g1, g2)?;
                let g2inv = s.base.inverse(g2)?;
                let h = s.rep.act(&g2inv) * as_vector(h1)? + as_vector(h2)?;
                Ok(GroupPoint::pair(g, GroupPoint::Vector(h)))
            }
            GroupModel::FourierDiffeo(d) => Ok(GroupPoint::Diffeo(d.compose(as_diffeo(a)?, as_diffeo(b)?)?)),
            GroupModel::Extension(e) => {
                let (x, m) = a.split()?;
                let (y, n) = b.split()?;
                let xy = e.base.multiply(x, y)?;
                let fiber = e.fiber.multiply(
                    &e.fiber.multiply(&e.datum.f(x, y), &e.datum.alpha(m, y))?,
                    n,
                )?;
                Ok(GroupPoint::pair(xy, fiber))
            }
        }
    }

    pub fn inverse(&self, a: &GroupPoint) -> Result<GroupPoint> {
        match self {
            GroupModel::Rotation(_) => Ok(GroupPoint::Matrix(as_matrix(a)?.transpose())),
            GroupModel::Euclidean(_) => Ok(GroupPoint::Vector(-as_vector(a)?.clone())),
            GroupModel::Semidirect(s) => {
                let (g, h) = a.split()?;
                let h = -(s.rep.act(g) * as_vector(h)?);
                Ok(GroupPoint::pair(s.base.inverse(g)?, GroupPoint::Vector(h)))
            }
            GroupModel::FourierDiffeo(d) => Ok(GroupPoint::Diffeo(d.inverse(as_diffeo(a)?)?)),
            GroupModel::Extension(e) => {
                let (x, m) = a.split()?;
                let xinv = e.base.inverse(x)?;
                let minv = e.fiber.inverse(m)?;
                let f = e.fiber.inverse(&e.datum.f(x, &xinv))?;
                let fiber = e.fiber.multiply(&e.datum.alpha(&minv, &xinv), &f)?;
                Ok(GroupPoint::pair(xinv, fiber))
            }
        }
    }

    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_algebra(x)?;
        self.check_algebra(y)?;
        match self {
            GroupModel::Rotation(2) | GroupModel::Euclidean(_) => Ok(DVector::zeros(x.len())),
            GroupModel::Rotation(_) => Ok(x.cross(y)),
            GroupModel::Semidirect(s) => {
                let (a, v) = s.split(x);
                let (b, w) = s.split(y);
                let base = s.base.bracket(&a, &b)?;
                let fiber = s.rep.generator_matrix(&s.base, &a)? * w - s.rep.generator_matrix(&s.base, &b)? * v;
                Ok(semidirect::join(&base, &fiber))
            }
            GroupModel::FourierDiffeo(d) => Ok(d.bracket(x, y)),
            GroupModel::Extension(_) => self.bracket_by_conjugation(x, y),
        }
    }

    /// Matrix of `v -> [u, v]` in the algebra coordinates.
    pub fn ad_matrix(&self, u: &AlgebraVector) -> Result<DMatrix<f64>> {
        let n = self.algebra_dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for i in 0..n {
            e.fill(0.0);
            e[i] = 1.0;
            m.set_column(i, &self.bracket(u, &e)?);
        }
        Ok(m)
    }

    /// `d/dt d/ds kappa(tau(tX) tau(sY) tau(tX)^-1)` by a Richardson-refined cross stencil.
    fn bracket_by_conjugation(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        let conj = |t: f64, s: f64| -> Result<DVector<f64>> {
            let a = self.chart_inv(&(x * t))?;
            let b = self.chart_inv(&(y * s))?;
            self.chart(&self.multiply(&self.multiply(&a, &b)?, &self.inverse(&a)?)?)
        };
        let cross = |h: f64| -> Result<DVector<f64>> {
            Ok((conj(h, h)? - conj(h, -h)? - conj(-h, h)? + conj(-h, -h)?) / (4.0 * h * h))
        };
        let h = BRACKET_FD_STEP;
        Ok((cross(h / 2.0)? * 4.0 - cross(h)?) / 3.0)
    }

    /// Time-one flow of the right-invariant field of `x` through `e`.
    pub fn exp(&self, x: &AlgebraVector) -> Result<GroupPoint> {
        self.check_algebra(x)?;
        match self {
            GroupModel::Rotation(n) => Ok(GroupPoint::Matrix(rotation::exp(*n, x))),
            GroupModel::Euclidean(_) => Ok(GroupPoint::Vector(x.clone())),
            GroupModel::Semidirect(s) => {
                let (a, v) = s.split(x);
                let b = s.rep.generator_matrix(&s.base, &a)?;
                let d = s.fiber_dim();
                let mut aug = DMatrix::zeros(d + 1, d + 1);
                aug.view_mut((0, 0), (d, d)).copy_from(&b);
                aug.view_mut((0, d), (d, 1)).copy_from(&v);
                let w: DVector<f64> = aug.exp().column(d).rows(0, d).into_owned();
                let h = (-b).exp() * w;
                Ok(GroupPoint::pair(s.base.exp(&a)?, GroupPoint::Vector(h)))
            }
            GroupModel::FourierDiffeo(d) => Ok(GroupPoint::Diffeo(d.flow(x)?)),
            GroupModel::Extension(_) => {
                let mut z = DVector::zeros(x.len());
                let h = 1.0 / RK_CHART_STEPS as f64;
                for _ in 0..RK_CHART_STEPS {
                    let k1 = self.chart_velocity(&z, x)?;
                    let k2 = self.chart_velocity(&(&z + &k1 * (0.5 * h)), x)?;
                    let k3 = self.chart_velocity(&(&z + &k2 * (0.5 * h)), x)?;
                    let k4 = self.chart_velocity(&(&z + &k3 * h), x)?;
                    z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                }
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::FlowDiverged("exponential left the chart".into()));
                }
                self.chart_inv(&z)
            }
        }
    }

    /// Chart `kappa` around the identity.
    pub fn chart(&self, p: &GroupPoint) -> Result<DVector<f64>> {
        match self {
            GroupModel::Rotation(n) => Ok(rotation::log(*n, as_matrix(p)?)),
            GroupModel::Euclidean(_) => Ok(as_vector(p)?.clone()),
            GroupModel::Semidirect(s) => {
                let (g, h) = p.split()?;
                Ok(semidirect::join(&s.base.chart(g)?, as_vector(h)?))
            }
            GroupModel::FourierDiffeo(_) => Ok(as_diffeo(p)?.clone()),
            GroupModel::Extension(e) => {
                let (x, m) = p.split()?;
                Ok(semidirect::join(&e.base.chart(x)?, &e.fiber.chart(m)?))
            }
        }
    }

    /// Inverse chart `tau`.
    pub fn chart_inv(&self, z: &DVector<f64>) -> Result<GroupPoint> {
        self.check_algebra(z)?;
        match self {
            GroupModel::Rotation(n) => Ok(GroupPoint::Matrix(rotation::exp(*n, z))),
            GroupModel::Euclidean(_) => Ok(GroupPoint::Vector(z.clone())),
            GroupModel::Semidirect(s) => {
                let (a, v) = s.split(z);
                Ok(GroupPoint::pair(s.base.chart_inv(&a)?, GroupPoint::Vector(v)))
            }
            GroupModel::FourierDiffeo(d) => {
                d.check(z)?;
                Ok(GroupPoint::Diffeo(z.clone()))
            }
            GroupModel::Extension(e) => {
                let nb = e.base.algebra_dim();
                let a = z.rows(0, nb).into_owned();
                let b = z.rows(nb, z.len() - nb).into_owned();
                Ok(GroupPoint::pair(e.base.chart_inv(&a)?, e.fiber.chart_inv(&b)?))
            }
        }
    }

    /// Matrix `T(z)` with `u = T(z) zdot`, where `u` is the right-trivialized
    /// velocity of a curve whose chart representative moves with `zdot`.
    pub fn trivialization(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_algebra(z)?;
        match self {
            GroupModel::Rotation(n) => Ok(rotation::dexp(*n, z)),
            GroupModel::Euclidean(n) => Ok(DMatrix::identity(*n, *n)),
            GroupModel::Semidirect(s) => {
                let (a, _) = s.split(z);
                let g = s.base.chart_inv(&a)?;
                Ok(block_diag(&s.base.trivialization(&a)?, &s.rep.act(&g)))
            }
            GroupModel::FourierDiffeo(d) => d
                .velocity_matrix(z)
                .try_inverse()
                .ok_or_else(|| Error::NotInvertible("chart velocity matrix is singular".into())),
            GroupModel::Extension(_) => {
                let n = z.len();
                let mut v = DMatrix::zeros(n, n);
                let mut e = DVector::zeros(n);
                for i in 0..n {
                    e.fill(0.0);
                    e[i] = 1.0;
                    v.set_column(i, &self.chart_velocity(z, &e)?);
                }
                v.try_inverse().ok_or_else(|| Error::NotInvertible("chart velocity matrix is singular".into()))
            }
        }
    }

    /// Chart velocity `d/ds kappa(exp(s u) tau(z))` at `s = 0`.
    pub fn chart_velocity(&self, z: &DVector<f64>, u: &AlgebraVector) -> Result<DVector<f64>> {
        self.check_algebra(u)?;
        match self {
            GroupModel::FourierDiffeo(d) => Ok(d.velocity_matrix(z) * u),
            GroupModel::Extension(_) => {
                let p = self.chart_inv(z)?;
                let at = |s: f64| -> Result<DVector<f64>> { self.chart(&self.multiply(&self.chart_inv(&(u * s))?, &p)?) };
                let s = FD_STEP;
                Ok(((at(s)? - at(-s)?) * 8.0 - (at(2.0 * s)? - at(-2.0 * s)?)) / (12.0 * s))
            }
            _ => self
                .trivialization(z)?
                .lu()
                .solve(u)
                .ok_or_else(|| Error::NotInvertible("trivialization matrix is singular".into())),
        }
    }

    /// Random algebra vector of Euclidean norm at most `radius`; Fourier
    /// models draw coefficients decaying like `2^-n`.
    pub fn sample_algebra(&self, rng: &mut ChaCha8Rng, radius: f64) -> AlgebraVector {
        match self {
            GroupModel::FourierDiffeo(d) => DVector::from_fn(d.dim(), |i, _| {
                let k = DiffeoModel::mode_of(i).max(1) as i32;
                0.1 * radius * (rng.random::<f64>() * 2.0 - 1.0) * 0.5f64.powi(k - 1)
            }),
            _ => gaussian_ball(rng, self.algebra_dim(), radius),
        }
    }

    /// Random point `tau(z)` with `z` from [`Self::sample_algebra`].
    /// For circle diffeomorphisms any `radius <= 1` keeps `1 + f' > 0`.
    pub fn sample(&self, rng: &mut ChaCha8Rng, radius: f64) -> GroupPoint {
        let r = match self {
            GroupModel::Rotation(3) => radius.min(3.0),
            _ => radius,
        };
        let z = self.sample_algebra(rng, r);
        self.chart_inv(&z).expect("sampled chart point lies in the chart")
    }

    /// `|kappa(a b^-1)|`.
    pub fn chart_distance(&self, a: &GroupPoint, b: &GroupPoint) -> Result<f64> {
        Ok(self.chart(&self.multiply(a, &self.inverse(b)?)?)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_2;

    fn rot(theta: f64) -> GroupPoint {
        GroupModel::so2().exp(&DVector::from_vec(vec![theta])).unwrap()
    }

    #[test]
    fn semidirect_product_example() {
        let g = GroupModel::special_euclidean(2);
        let a = GroupPoint::pair(rot(FRAC_PI_2), GroupPoint::vector(&[1.0, 0.0]));
        let b = GroupPoint::pair(rot(FRAC_PI_2), GroupPoint::vector(&[0.0, 0.0]));
        let c = g.multiply(&a, &b).unwrap();
        let expected = GroupPoint::pair(rot(std::f64::consts::PI), GroupPoint::vector(&[0.0, -1.0]));
        assert!(c.max_abs_diff(&expected) < 1e-15);
        let inv = g.inverse(&a).unwrap();
        assert!(inv.max_abs_diff(&GroupPoint::pair(rot(-FRAC_PI_2), GroupPoint::vector(&[0.0, -1.0]))) < 1e-15);
        assert!(g.multiply(&inv, &a).unwrap().max_abs_diff(&g.identity()) < 1e-15);
    }

    #[test]
    fn heisenberg_law() {
        let h = GroupModel::heisenberg();
        let a = GroupPoint::pair(GroupPoint::vector(&[1.0, 0.0]), GroupPoint::vector(&[0.0]));
        let b = GroupPoint::pair(GroupPoint::vector(&[0.0, 1.0]), GroupPoint::vector(&[0.0]));
        let c = h.multiply(&a, &b).unwrap();
        assert_eq!(c, GroupPoint::pair(GroupPoint::vector(&[1.0, 1.0]), GroupPoint::vector(&[1.0])));
        let p = GroupPoint::pair(GroupPoint::vector(&[0.5, 2.0]), GroupPoint::vector(&[0.3]));
        let inv = h.inverse(&p).unwrap();
        assert!(inv.max_abs_diff(&GroupPoint::pair(GroupPoint::vector(&[-0.5, -2.0]), GroupPoint::vector(&[-0.3 + 1.0]))) < 1e-15);
    }

    #[test]
    fn so3_bracket_and_exp() {
        let g = GroupModel::so3();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(g.bracket(&e1, &e2).unwrap(), DVector::from_vec(vec![0.0, 0.0, 1.0]));
        let (x, y) = (rotation::hat(3, &e1), rotation::hat(3, &e2));
        assert!((&x * &y - &y * &x - rotation::hat(3, &g.bracket(&e1, &e2).unwrap())).norm() < 1e-15);
    }

    #[test]
    fn semidirect_exp_solves_the_flow() {
        let g = GroupModel::special_euclidean(2);
        let x = DVector::from_vec(vec![0.7, 0.3, -0.4]);
        // Compose many small steps of the same flow.
        let steps = 2000;
        let small = g.exp(&(&x / steps as f64)).unwrap();
        let mut p = g.identity();
        for _ in 0..steps {
            p = g.multiply(&small, &p).unwrap();
        }
        assert!(p.max_abs_diff(&g.exp(&x).unwrap()) < 1e-12);
        // Pure translation stays a translation.
        let t = g.exp(&DVector::from_vec(vec![0.0, 1.0, 2.0])).unwrap();
        assert!(t.max_abs_diff(&GroupPoint::pair(rot(0.0), GroupPoint::vector(&[1.0, 2.0]))) < 1e-15);
    }

    #[test]
    fn heisenberg_bracket_is_symplectic_form() {
        let h = GroupModel::heisenberg();
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let y = DVector::from_vec(vec![-0.1, 0.4, 0.2]);
        let b = h.bracket(&x, &y).unwrap();
        let expected = DVector::from_vec(vec![0.0, 0.0, x[0] * y[1] - x[1] * y[0]]);
        assert!((b - expected).norm() < 1e-9);
    }

    #[test]
    fn trivialization_consistent_with_chart_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [GroupModel::so3(), GroupModel::special_euclidean(3), GroupModel::heisenberg()] {
            let z = g.sample_algebra(&mut rng, 0.8);
            let u = g.sample_algebra(&mut rng, 1.0);
            let zdot = g.chart_velocity(&z, &u).unwrap();
            // finite-difference definition
            let p = g.chart_inv(&z).unwrap();
            let s = 1e-6;
            let fwd = g.chart(&g.multiply(&g.exp(&(&u * s)).unwrap(), &p).unwrap()).unwrap();
            let bwd = g.chart(&g.multiply(&g.exp(&(&u * -s)).unwrap(), &p).unwrap()).unwrap();
            assert!(((fwd - bwd) / (2.0 * s) - &zdot).norm() < 1e-7, "{}", g.name());
            assert!((g.trivialization(&z).unwrap() * zdot - u).norm() < 1e-9);
        }
    }

    #[test]
    fn point_records_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for g in [GroupModel::so3(), GroupModel::special_euclidean(2), GroupModel::fourier_diffeo(3).unwrap()] {
            let p = g.sample(&mut rng, 0.5);
            let rec = PointRecord::from(&p);
            let json = serde_json::to_string(&rec).unwrap();
            let back: PointRecord = serde_json::from_str(&json).unwrap();
            assert_eq!(GroupPoint::try_from(&back).unwrap(), p);
        }
    }
}
