//! Sectional curvature from the cometric with chart-constant 1-forms:
//! `g(R(a#, b#) b#, a#) = R11 + R12 + R2 + R3` built from the symmetrized
//! force `F(a, b) = 1/2 d(g^-1(a, b))` and the stress
//! `D(a, b) = d(b# - X_b).a#`, checked against Christoffel symbols.

use crate::error::{Error, Result};
use crate::groups::GroupModel;
use crate::riemann::Metric;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

pub type MetricFn = Arc<dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;

/// Metric matrix `g(z)` on a chart domain; points where it fails are outside.
#[derive(Clone)]
pub struct ChartMetricField {
    pub name: String,
    pub dim: usize,
    metric: MetricFn,
}

impl fmt::Debug for ChartMetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetricField").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl ChartMetricField {
    pub fn new(name: &str, dim: usize, metric: MetricFn) -> Self {
        ChartMetricField { name: name.into(), dim, metric }
    }

    /// Right-invariant metric `T(z)^T A T(z)` in the chart at `e`.
    pub fn from_metric(metric: &Metric) -> Self {
        let m = metric.clone();
        let rotation = matches!(m.model(), GroupModel::Rotation(3));
        let dim = m.model().algebra_dim();
        let name = m.model().name();
        ChartMetricField::new(
            &name,
            dim,
            Arc::new(move |z| {
                if rotation && z.norm() >= std::f64::consts::PI {
                    return Err(Error::DomainBoundary(z.as_slice().to_vec()));
                }
                m.chart_metric(z).map_err(|_| Error::DomainBoundary(z.as_slice().to_vec()))
            }),
        )
    }

    /// Upper half-plane `g = y^-2 I`.
    pub fn hyperbolic() -> Self {
        ChartMetricField::new(
            "hyperbolic-half-plane",
            2,
            Arc::new(|z| {
                if z[1] <= 0.0 {
                    return Err(Error::DomainBoundary(z.as_slice().to_vec()));
                }
                Ok(DMatrix::identity(2, 2) / (z[1] * z[1]))
            }),
        )
    }

    pub fn flat(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        ChartMetricField::new("flat", n, Arc::new(move |_| Ok(a.clone())))
    }

    /// `g = L L^T` with `L = I + eps M(z)`, entries of `M` either
    /// `sin(w . z + phi)` (`trig`) or quadratic polynomials in `z`.
    pub fn random(rng: &mut ChaCha8Rng, dim: usize, trig: bool) -> Self {
        let eps = 0.3 / dim as f64;
        let mut coeffs = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = rng.random_range(-1.0..1.0);
            coeffs.push((w, q, c));
        }
        let name = if trig { "random-trig" } else { "random-poly" };
        ChartMetricField::new(
            name,
            dim,
            Arc::new(move |z| {
                let l = DMatrix::from_fn(dim, dim, |i, j| {
                    let (w, q, c) = &coeffs[i * dim + j];
                    let lin: f64 = w.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                    let m = if trig {
                        (lin + c).sin()
                    } else {
                        let quad: f64 = q.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                        c + lin * 0.5 + quad * quad * 0.5
                    };
                    eps * m + if i == j { 1.0 } else { 0.0 }
                });
                Ok(&l * l.transpose())
            }),
        )
    }

    pub fn metric(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("chart point has {} entries, expected {}", z.len(), self.dim)));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainBoundary(z.as_slice().to_vec()));
        }
        (self.metric)(z)
    }

    pub fn cometric(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.metric(z)?;
        g.cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::SingularInertia(format!("chart metric not positive definite at {:?}", z.as_slice())))
    }
}

/// Covectors `alpha`, `beta` at `x`, extended as chart constants.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorPair {
    pub x: DVector<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
}

impl CovectorPair {
    pub fn new(x: DVector<f64>, alpha: DVector<f64>, beta: DVector<f64>) -> Result<Self> {
        if alpha.len() != x.len() || beta.len() != x.len() {
            return Err(Error::DimensionMismatch("covectors must match the chart dimension".into()));
        }
        if x.iter().chain(alpha.iter()).chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite covector pair".into()));
        }
        Ok(CovectorPair { x, alpha, beta })
    }

    /// The pair with `alpha# = xv`, `beta# = yv`.
    pub fn from_vectors(field: &ChartMetricField, x: &DVector<f64>, xv: &DVector<f64>, yv: &DVector<f64>) -> Result<Self> {
        let g = field.metric(x)?;
        Self::new(x.clone(), &g * xv, &g * yv)
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Cometric at `x`, its first partials and its second partials by central
/// differences (diagonal three-point, mixed four-point cross).
struct CometricJet {
    c: DMatrix<f64>,
    d1: Vec<DMatrix<f64>>,
    d2: Vec<Vec<DMatrix<f64>>>,
}

fn cometric_jet(field: &ChartMetricField, x: &DVector<f64>, h: f64, second: bool) -> Result<CometricJet> {
    let n = field.dim;
    let at = |v: DVector<f64>| -> Result<DMatrix<f64>> {
        field.cometric(&v).map_err(|e| match e {
            Error::DomainBoundary(_) | Error::SingularInertia(_) => Error::DomainBoundary(v.as_slice().to_vec()),
            other => other,
        })
    };
    let c = at(x.clone())?;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        plus.push(at(x + unit(n, i) * h)?);
        minus.push(at(x - unit(n, i) * h)?);
    }
    let d1 = (0..n).map(|i| (&plus[i] - &minus[i]) / (2.0 * h)).collect();
    let mut d2 = vec![vec![DMatrix::zeros(n, n); n]; n];
    if second {
        for i in 0..n {
            d2[i][i] = (&plus[i] - &c * 2.0 + &minus[i]) / (h * h);
            for j in 0..i {
                let ei = unit(n, i) * h;
                let ej = unit(n, j) * h;
                let m = (at(x + &ei + &ej)? - at(x + &ei - &ej)? - at(x - &ei + &ej)? + at(x - &ei - &ej)?) / (4.0 * h * h);
                d2[j][i] = m.clone();
                d2[i][j] = m;
            }
        }
    }
    Ok(CometricJet { c, d1, d2 })
}

fn force_from(jet: &CometricJet, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.len(), |i, _| 0.5 * a.dot(&(&jet.d1[i] * b)))
}

/// `D(a, b) = (d_z g^-1(z) b) . g^-1(x) a`.
fn stress_from(jet: &CometricJet, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let sharp = &jet.c * a;
    let mut out = DVector::zeros(a.len());
    for (i, d) in jet.d1.iter().enumerate() {
        out += d * b * sharp[i];
    }
    out
}

/// Symmetrized force `F(alpha, beta) = 1/2 d(g^-1(alpha, beta))` at `x`.
pub fn force(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<DVector<f64>> {
    let jet = cometric_jet(field, &pair.x, h, false)?;
    Ok(force_from(&jet, &pair.alpha, &pair.beta))
}

/// Stress `D(alpha, beta) = d(beta# - X_beta).alpha#` at `x`.
pub fn stress(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<DVector<f64>> {
    let jet = cometric_jet(field, &pair.x, h, false)?;
    Ok(stress_from(&jet, &pair.alpha, &pair.beta))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvatureTerms {
    pub r11: f64,
    pub r12: f64,
    pub r2: f64,
    pub r3: f64,
    pub total: f64,
}

/// The four terms of the numerator `g(R(a#, b#) b#, a#)`.
pub fn curvature_terms(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<CurvatureTerms> {
    let jet = cometric_jet(field, &pair.x, h, true)?;
    let (a, b) = (&pair.alpha, &pair.beta);
    let xa = &jet.c * a;
    let xb = &jet.c * b;
    let n = a.len();
    // Second directional derivative of g^-1(p, q) along u then v.
    let second = |u: &DVector<f64>, v: &DVector<f64>, p: &DVector<f64>, q: &DVector<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * v[j] * p.dot(&(&jet.d2[i][j] * q));
            }
        }
        s
    };
    let r11 = 0.5 * (second(&xa, &xa, b, b) - 2.0 * second(&xa, &xb, a, b) + second(&xb, &xb, a, a));

    let f_aa = force_from(&jet, a, a);
    let f_bb = force_from(&jet, b, b);
    let f_ab = force_from(&jet, a, b);
    let d_aa = stress_from(&jet, a, a);
    let d_bb = stress_from(&jet, b, b);
    let d_ab = stress_from(&jet, a, b);
    let d_ba = stress_from(&jet, b, a);
    let r12 = f_aa.dot(&d_bb) + f_bb.dot(&d_aa) - f_ab.dot(&(&d_ab + &d_ba));
    let r2 = f_ab.dot(&(&jet.c * &f_ab)) - f_aa.dot(&(&jet.c * &f_bb));
    let g = field.metric(&pair.x)?;
    let diff = &d_ab - &d_ba;
    let r3 = -0.75 * diff.dot(&(&g * &diff));
    Ok(CurvatureTerms { r11, r12, r2, r3, total: r11 + r12 + r2 + r3 })
}

pub fn sectional_numerator(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<f64> {
    Ok(curvature_terms(field, pair, h)?.total)
}

/// Richardson combination `(4 N(h/2) - N(h)) / 3` of the numerator.
pub fn sectional_numerator_richardson(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<f64> {
    let coarse = sectional_numerator(field, pair, h)?;
    let fine = sectional_numerator(field, pair, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `|a#|^2 |b#|^2 - g(a#, b#)^2`.
pub fn area_element(field: &ChartMetricField, pair: &CovectorPair) -> Result<f64> {
    let c = field.cometric(&pair.x)?;
    let aa = pair.alpha.dot(&(&c * &pair.alpha));
    let bb = pair.beta.dot(&(&c * &pair.beta));
    let ab = pair.alpha.dot(&(&c * &pair.beta));
    Ok(aa * bb - ab * ab)
}

pub fn sectional_curvature(field: &ChartMetricField, pair: &CovectorPair, h: f64) -> Result<f64> {
    let area = area_element(field, pair)?;
    if !(area > 1e-12) {
        return Err(Error::DegeneratePlane(area));
    }
    Ok(sectional_numerator(field, pair, h)? / area)
}

/// `Gamma^k_ij(z)` as `gamma[k][(i, j)]` from central differences of `g`.
fn christoffel(field: &ChartMetricField, z: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = field.dim;
    let at = |v: DVector<f64>| -> Result<DMatrix<f64>> {
        field.metric(&v).map_err(|e| match e {
            Error::DomainBoundary(_) => Error::DomainBoundary(v.as_slice().to_vec()),
            other => other,
        })
    };
    let g = at(z.clone())?;
    let ginv = g
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularInertia("chart metric not positive definite".into()))?;
    let dg: Vec<DMatrix<f64>> =
        (0..n).map(|l| Ok((at(z + unit(n, l) * h)? - at(z - unit(n, l) * h)?) / (2.0 * h))).collect::<Result<_>>()?;
    // First kind: [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij).
    let mut out = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in 0..n {
            let first = DVector::from_fn(n, |l, _| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]));
            let second = &ginv * first;
            for k in 0..n {
                out[k][(i, j)] = second[k];
            }
        }
    }
    Ok(out)
}

/// `g(R(X, Y) Y, X)` at `x` with `R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]`,
/// from Christoffel symbols and their central differences.
pub fn riemann_fd_oracle(field: &ChartMetricField, x: &DVector<f64>, xv: &DVector<f64>, yv: &DVector<f64>, h: f64) -> Result<f64> {
    let n = field.dim;
    if xv.len() != n || yv.len() != n {
        return Err(Error::DimensionMismatch("tangent vectors must match the chart dimension".into()));
    }
    let gam = christoffel(field, x, h)?;
    let dgam: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|i| {
            let p = christoffel(field, &(x + unit(n, i) * h), h)?;
            let m = christoffel(field, &(x - unit(n, i) * h), h)?;
            Ok((0..n).map(|k| (&p[k] - &m[k]) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    // R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    let mut ryy = DVector::zeros(n);
    for l in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let coef = xv[i] * yv[j] * yv[k];
                    if coef == 0.0 {
                        continue;
                    }
                    let mut r = dgam[i][l][(j, k)] - dgam[j][l][(i, k)];
                    for m in 0..n {
                        r += gam[l][(i, m)] * gam[m][(j, k)] - gam[l][(j, m)] * gam[m][(i, k)];
                    }
                    s += coef * r;
                }
            }
        }
        ryy[l] = s;
    }
    let g = field.metric(x)?;
    Ok(xv.dot(&(&g * ryy)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureRow {
    pub model: String,
    pub point: Vec<f64>,
    pub plane: String,
    pub numerator_formula: f64,
    pub numerator_oracle: f64,
    pub sectional: f64,
    pub discrepancy: f64,
}

/// Formula, oracle and normalized value for one pair; `plane` labels it.
pub fn curvature_row(field: &ChartMetricField, pair: &CovectorPair, plane: &str, h: f64) -> Result<CurvatureRow> {
    let formula = sectional_numerator(field, pair, h)?;
    let c = field.cometric(&pair.x)?;
    let oracle = riemann_fd_oracle(field, &pair.x, &(&c * &pair.alpha), &(&c * &pair.beta), h)?;
    let area = area_element(field, pair)?;
    if !(area > 1e-12) {
        return Err(Error::DegeneratePlane(area));
    }
    Ok(CurvatureRow {
        model: field.name.clone(),
        point: pair.x.as_slice().to_vec(),
        plane: plane.into(),
        numerator_formula: formula,
        numerator_oracle: oracle,
        sectional: formula / area,
        discrepancy: (formula - oracle).abs(),
    })
}

pub fn curvature_csv(rows: &[CurvatureRow]) -> String {
    let mut out = String::from("model,point,plane,numerator_formula,numerator_oracle,sectional,discrepancy\n");
    for r in rows {
        let point = r.point.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e}",
            r.model, point, r.plane, r.numerator_formula, r.numerator_oracle, r.sectional, r.discrepancy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn hyperbolic_force_and_stress() {
        let f = ChartMetricField::hyperbolic();
        let p = CovectorPair::new(v(&[0.0, 1.0]), v(&[0.0, 1.0]), v(&[0.0, 1.0])).unwrap();
        assert!((force(&f, &p, 1e-3).unwrap() - v(&[0.0, 1.0])).amax() < 1e-9);
        assert!((stress(&f, &p, 1e-3).unwrap() - v(&[0.0, 2.0])).amax() < 1e-9);
    }

    #[test]
    fn hyperbolic_terms() {
        let f = ChartMetricField::hyperbolic();
        let p = CovectorPair::new(v(&[0.0, 1.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])).unwrap();
        let t = curvature_terms(&f, &p, 1e-3).unwrap();
        for (got, want) in [(t.r11, 1.0), (t.r12, 2.0), (t.r2, -1.0), (t.r3, -3.0)] {
            assert!((got - want).abs() < 1e-6, "{t:?}");
        }
    }

    #[test]
    fn boundary_is_reported() {
        let f = ChartMetricField::hyperbolic();
        let p = CovectorPair::new(v(&[0.0, 1e-4]), v(&[1.0, 0.0]), v(&[0.0, 1.0])).unwrap();
        assert!(matches!(sectional_numerator(&f, &p, 1e-3), Err(Error::DomainBoundary(_))));
    }
}
