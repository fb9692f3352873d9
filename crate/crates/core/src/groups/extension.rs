//! Extension data `(alpha, f)` and the groups `E(alpha, f)` on `G x N` with
//! `(x, m)(y, n) = (xy, f(x, y) alpha^y(m) n)`.

use super::{GroupModel, GroupPoint, Representation};
use crate::error::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

pub type AlphaFn = Arc<dyn Fn(&GroupPoint, &GroupPoint) -> GroupPoint + Send + Sync>;
pub type CocycleFn = Arc<dyn Fn(&GroupPoint, &GroupPoint) -> GroupPoint + Send + Sync>;

/// `alpha(m, y) = alpha^y(m)` and `f(x, y)`; both are user callables.
#[derive(Clone)]
pub struct ExtensionDatum {
    pub name: String,
    pub alpha: AlphaFn,
    pub f: CocycleFn,
    pub central: bool,
    pub fiber_abelian: bool,
}

impl fmt::Debug for ExtensionDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtensionDatum")
            .field("name", &self.name)
            .field("central", &self.central)
            .field("fiber_abelian", &self.fiber_abelian)
            .finish()
    }
}

fn vec_point(p: &GroupPoint) -> &nalgebra::DVector<f64> {
    match p {
        GroupPoint::Vector(v) => v,
        other => panic!("expected a vector point, got {other:?}"),
    }
}

impl ExtensionDatum {
    /// Heisenberg cocycle over `R^2` with fiber `R`: `f((a, b), (c, d)) = a d`.
    pub fn heisenberg() -> Self {
        Self::planar_cocycle("heisenberg", |x, y| x[0] * y[1])
    }

    /// `f((a, b), (c, d)) = a d + b d^2`, which is not a cocycle.
    pub fn perturbed_heisenberg() -> Self {
        Self::planar_cocycle("perturbed-heisenberg", |x, y| x[0] * y[1] + x[1] * y[1] * y[1])
    }

    /// Central datum over `R^2` with fiber `R` and trivial `alpha`.
    pub fn planar_cocycle(name: &str, f: fn(&[f64], &[f64]) -> f64) -> Self {
        ExtensionDatum {
            name: name.into(),
            alpha: Arc::new(|m, _| m.clone()),
            f: Arc::new(move |x, y| {
                let v = f(vec_point(x).as_slice(), vec_point(y).as_slice());
                GroupPoint::Vector(nalgebra::DVector::from_vec(vec![v]))
            }),
            central: true,
            fiber_abelian: true,
        }
    }

    /// Split datum of a semidirect product: `f = e`, `alpha^y(m) = rho(y^-1) m`.
    pub fn split(base: GroupModel, rep: Representation) -> Self {
        let dim = rep.fiber_dim;
        ExtensionDatum {
            name: format!("split-{}", rep.name),
            alpha: Arc::new(move |m, y| {
                let yinv = base.inverse(y).expect("base inverse");
                GroupPoint::Vector(rep.act(&yinv) * vec_point(m))
            }),
            f: Arc::new(move |_, _| GroupPoint::Vector(nalgebra::DVector::zeros(dim))),
            central: false,
            fiber_abelian: true,
        }
    }

    pub fn alpha(&self, m: &GroupPoint, y: &GroupPoint) -> GroupPoint {
        (self.alpha)(m, y)
    }

    pub fn f(&self, x: &GroupPoint, y: &GroupPoint) -> GroupPoint {
        (self.f)(x, y)
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionModel {
    pub base: GroupModel,
    pub fiber: GroupModel,
    pub datum: ExtensionDatum,
}

impl ExtensionModel {
    pub fn new(base: GroupModel, fiber: GroupModel, datum: ExtensionDatum) -> Self {
        ExtensionModel { base, fiber, datum }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub normalization_residual: f64,
    /// `f(xy,z)^-1 f(x,yz) f(y,z) alpha^z(f(x,y)^-1) = e`
    pub cocycle_residual: f64,
    /// `alpha^x o alpha^y = conj_{f(y,x)^-1} o alpha^{yx}`
    pub alpha_residual: f64,
    /// `f(y,z) f(xy,z)^-1 f(x,yz) f(x,y)^-1 = e`, central data only.
    pub central_residual: Option<f64>,
    /// Base chart coordinates of each sampled triple.
    pub triples: Vec<[Vec<f64>; 3]>,
    pub cocycle_residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

pub const VALIDATION_TOL: f64 = 1e-9;

fn fiber_residual(fiber: &GroupModel, p: &GroupPoint) -> Result<f64> {
    Ok(fiber.chart(p)?.norm())
}

/// Checks the identities implied by associativity of the extension law on
/// seeded random triples; failures are reported, never raised.
pub fn validate_extension_datum(
    datum: &ExtensionDatum,
    fiber: &GroupModel,
    base: &GroupModel,
    n_samples: usize,
    seed: u64,
) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport {
        samples: n_samples,
        normalization_residual: 0.0,
        cocycle_residual: 0.0,
        alpha_residual: 0.0,
        central_residual: if datum.central { Some(0.0) } else { None },
        triples: Vec::with_capacity(n_samples),
        cocycle_residuals: Vec::with_capacity(n_samples),
        max_residual: 0.0,
        pass: false,
    };
    let mut failed = false;
    let e = base.identity();
    // Chart coordinates are rounded to multiples of 2^-6 so that polynomial
    // data evaluate without roundoff.
    let dyadic = |g: &GroupModel, rng: &mut ChaCha8Rng| -> GroupPoint {
        let z = g.sample_algebra(rng, 1.0).map(|v| (v * 64.0).round() / 64.0);
        g.chart_inv(&z).unwrap_or_else(|_| g.identity())
    };
    for _ in 0..n_samples {
        let x = dyadic(base, &mut rng);
        let y = dyadic(base, &mut rng);
        let z = dyadic(base, &mut rng);
        let m = dyadic(fiber, &mut rng);
        let r: Result<()> = (|| {
            let mul = |a: &GroupPoint, b: &GroupPoint| fiber.multiply(a, b);
            let inv = |a: &GroupPoint| fiber.inverse(a);
            let bm = |a: &GroupPoint, b: &GroupPoint| base.multiply(a, b);

            for p in [datum.f(&e, &e), datum.f(&x, &e), datum.f(&e, &y)] {
                report.normalization_residual = report.normalization_residual.max(fiber_residual(fiber, &p)?);
            }

            let xy = bm(&x, &y)?;
            let yz = bm(&y, &z)?;
            let fxy = datum.f(&x, &y);
            let c = mul(
                &mul(&mul(&inv(&datum.f(&xy, &z))?, &datum.f(&x, &yz))?, &datum.f(&y, &z))?,
                &datum.alpha(&inv(&fxy)?, &z),
            )?;
            let res = fiber_residual(fiber, &c)?;
            report.cocycle_residual = report.cocycle_residual.max(res);
            report.cocycle_residuals.push(res);
            report.triples.push([base.chart(&x)?.as_slice().to_vec(), base.chart(&y)?.as_slice().to_vec(), base.chart(&z)?.as_slice().to_vec()]);

            let lhs = datum.alpha(&datum.alpha(&m, &y), &x);
            let a = inv(&datum.f(&y, &x))?;
            let yx = bm(&y, &x)?;
            let rhs = mul(&mul(&a, &datum.alpha(&m, &yx))?, &inv(&a)?)?;
            let res = fiber_residual(fiber, &mul(&lhs, &inv(&rhs)?)?)?;
            report.alpha_residual = report.alpha_residual.max(res);

            if let Some(cr) = report.central_residual.as_mut() {
                let v = mul(
                    &mul(&mul(&datum.f(&y, &z), &inv(&datum.f(&xy, &z))?)?, &datum.f(&x, &yz))?,
                    &inv(&fxy)?,
                )?;
                *cr = cr.max(fiber_residual(fiber, &v)?);
            }
            Ok(())
        })();
        if r.is_err() {
            failed = true;
        }
    }
    report.max_residual = [
        report.normalization_residual,
        report.cocycle_residual,
        report.alpha_residual,
        report.central_residual.unwrap_or(0.0),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    report.pass = !failed && report.max_residual <= VALIDATION_TOL;
    report
}
