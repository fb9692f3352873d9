//! Representations for right semidirect products `G x_rho H`.

use super::{rotation, GroupModel, GroupPoint};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

pub type ActionFn = Arc<dyn Fn(&GroupPoint) -> DMatrix<f64> + Send + Sync>;
pub type GeneratorFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A linear representation `rho: G -> GL(fiber_dim)` with optional
/// infinitesimal generator `d rho: g -> gl(fiber_dim)`. Without a generator,
/// `d rho` is taken by central differences of `rho o exp`.
#[derive(Clone)]
pub struct Representation {
    pub name: String,
    pub fiber_dim: usize,
    pub action: ActionFn,
    pub generator: Option<GeneratorFn>,
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Representation")
            .field("name", &self.name)
            .field("fiber_dim", &self.fiber_dim)
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

impl Representation {
    /// Defining representation of SO(n) on R^n.
    pub fn rotation(n: usize) -> Self {
        Representation {
            name: format!("rotation{n}"),
            fiber_dim: n,
            action: Arc::new(|g| match g {
                GroupPoint::Matrix(m) => m.clone(),
                _ => panic!("rotation representation expects a matrix point"),
            }),
            generator: Some(Arc::new(move |xi| rotation::hat(n, xi))),
        }
    }

    pub fn trivial(fiber_dim: usize) -> Self {
        Representation {
            name: "trivial".into(),
            fiber_dim,
            action: Arc::new(move |_| DMatrix::identity(fiber_dim, fiber_dim)),
            generator: Some(Arc::new(move |_| DMatrix::zeros(fiber_dim, fiber_dim))),
        }
    }

    pub fn act(&self, g: &GroupPoint) -> DMatrix<f64> {
        (self.action)(g)
    }

    pub fn generator_matrix(&self, base: &GroupModel, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(gen) = &self.generator {
            return Ok(gen(xi));
        }
        let eps = 1e-5;
        let plus = self.act(&base.exp(&(xi * eps))?);
        let minus = self.act(&base.exp(&(xi * -eps))?);
        Ok((plus - minus) / (2.0 * eps))
    }
}

#[derive(Clone, Debug)]
pub struct SemidirectModel {
    pub base: GroupModel,
    pub rep: Representation,
}

impl SemidirectModel {
    pub fn new(base: GroupModel, rep: Representation) -> Result<Self> {
        if rep.fiber_dim == 0 {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        Ok(SemidirectModel { base, rep })
    }

    pub fn base_dim(&self) -> usize {
        self.base.algebra_dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.rep.fiber_dim
    }

    pub fn split(&self, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let b = self.base_dim();
        (v.rows(0, b).into_owned(), v.rows(b, self.fiber_dim()).into_owned())
    }
}

pub fn join(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(a.len() + b.len());
    v.rows_mut(0, a.len()).copy_from(a);
    v.rows_mut(a.len(), b.len()).copy_from(b);
    v
}
