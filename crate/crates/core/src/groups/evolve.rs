//! Time-discretized controls, the evolution `d/dt g = X(t) g`, and the
//! flow characterization of the bracket.

use super::{AlgebraVector, GroupModel, GroupPoint};
use crate::error::{Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// `M` samples, one per interval `[t_i, t_{i+1})`.
    PiecewiseConstant,
    /// `M + 1` node values at `t_0, ..., t_M`, linear in between.
    Linear,
}

/// A control `xi: [0, 1] -> g` on the uniform grid `t_i = i / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath {
    samples: Vec<AlgebraVector>,
    interpolation: Interpolation,
}

impl ControlPath {
    pub fn new(samples: Vec<AlgebraVector>, interpolation: Interpolation) -> Result<Self> {
        let min = match interpolation {
            Interpolation::PiecewiseConstant => 1,
            Interpolation::Linear => 2,
        };
        if samples.len() < min {
            return Err(Error::InvalidInput(format!("control path needs at least {min} samples")));
        }
        let d = samples[0].len();
        if samples.iter().any(|s| s.len() != d) {
            return Err(Error::DimensionMismatch("control samples differ in dimension".into()));
        }
        Ok(ControlPath { samples, interpolation })
    }

    pub fn constant(u: &AlgebraVector, intervals: usize) -> Self {
        ControlPath { samples: vec![u.clone(); intervals.max(1)], interpolation: Interpolation::PiecewiseConstant }
    }

    pub fn zero(dim: usize, intervals: usize) -> Self {
        Self::constant(&DVector::zeros(dim), intervals)
    }

    pub fn samples(&self) -> &[AlgebraVector] {
        &self.samples
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.samples.len(),
            Interpolation::Linear => self.samples.len() - 1,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.intervals();
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }

    /// Value at time `t` inside interval `i` (so that interval ends use the
    /// interval's own piece).
    pub fn value_in(&self, i: usize, t: f64) -> AlgebraVector {
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.samples[i].clone(),
            Interpolation::Linear => {
                let s = (t * self.intervals() as f64 - i as f64).clamp(0.0, 1.0);
                &self.samples[i] * (1.0 - s) + &self.samples[i + 1] * s
            }
        }
    }

    pub fn value(&self, t: f64) -> AlgebraVector {
        let m = self.intervals();
        let i = ((t * m as f64).floor() as usize).min(m - 1);
        self.value_in(i, t)
    }

    pub fn scaled(&self, c: f64) -> Self {
        ControlPath { samples: self.samples.iter().map(|s| s * c).collect(), interpolation: self.interpolation }
    }

    /// `a` on `[0, 1/2]` followed by `b` on `[1/2, 1]`, each reparametrized
    /// (and hence doubled), so that `Evol(concat)(1) = Evol(b)(1) Evol(a)(1)`.
    pub fn concat(a: &ControlPath, b: &ControlPath) -> Result<Self> {
        if a.interpolation != Interpolation::PiecewiseConstant || b.interpolation != Interpolation::PiecewiseConstant {
            return Err(Error::InvalidInput("concatenation is defined for piecewise-constant paths".into()));
        }
        if a.intervals() != b.intervals() || a.dim() != b.dim() {
            return Err(Error::DimensionMismatch("concatenated paths need equal grids".into()));
        }
        let samples = a.samples.iter().chain(&b.samples).map(|s| s * 2.0).collect();
        ControlPath::new(samples, Interpolation::PiecewiseConstant)
    }
}

/// Serialized control path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPathRecord {
    pub interpolation: Interpolation,
    pub samples: Vec<Vec<f64>>,
}

impl From<&ControlPath> for ControlPathRecord {
    fn from(p: &ControlPath) -> Self {
        ControlPathRecord {
            interpolation: p.interpolation,
            samples: p.samples.iter().map(|s| s.as_slice().to_vec()).collect(),
        }
    }
}

impl TryFrom<&ControlPathRecord> for ControlPath {
    type Error = Error;
    fn try_from(r: &ControlPathRecord) -> Result<Self> {
        ControlPath::new(r.samples.iter().map(|s| DVector::from_column_slice(s)).collect(), r.interpolation)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    /// `g <- exp(h xi(t + h/2)) g`, second order.
    #[default]
    Midpoint,
    /// Runge-Kutta-Munthe-Kaas of order four with the truncated `dexp^-1`.
    Rkmk4,
}

/// `Evol(xi)` sampled at the control times, midpoint rule.
pub fn evolve(model: &GroupModel, xi: &ControlPath, h: f64) -> Result<Vec<GroupPoint>> {
    evolve_with(model, xi, h, EvolveMethod::Midpoint)
}

/// `dexp^-1_theta(x)` truncated after the second Bernoulli term.
pub(crate) fn dexpinv(model: &GroupModel, theta: &AlgebraVector, x: &AlgebraVector) -> Result<AlgebraVector> {
    let b1 = model.bracket(theta, x)?;
    let b2 = model.bracket(theta, &b1)?;
    Ok(x - b1 * 0.5 + b2 / 12.0)
}

/// Increment `theta` with `g(t + h) = exp(theta) g(t)` for one RKMK4 step
/// with control values at `t`, `t + h/2`, `t + h`.
pub(crate) fn rkmk4_increment(
    model: &GroupModel,
    h: f64,
    x0: &AlgebraVector,
    xm: &AlgebraVector,
    x1: &AlgebraVector,
) -> Result<AlgebraVector> {
    let k1 = x0.clone();
    let k2 = dexpinv(model, &(&k1 * (0.5 * h)), xm)?;
    let k3 = dexpinv(model, &(&k2 * (0.5 * h)), xm)?;
    let k4 = dexpinv(model, &(&k3 * h), x1)?;
    Ok((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

pub fn evolve_with(model: &GroupModel, xi: &ControlPath, h: f64, method: EvolveMethod) -> Result<Vec<GroupPoint>> {
    model.check_algebra(&xi.samples[0])?;
    let dt = xi.dt();
    let steps = (dt / h).round();
    if !(h > 0.0) || steps < 1.0 || ((steps * h - dt).abs() > 1e-9 * dt) {
        return Err(Error::StepRejected(format!("step {h} does not divide the control spacing {dt}")));
    }
    let steps = steps as usize;
    let h = dt / steps as f64;
    let mut g = model.identity();
    let mut out = Vec::with_capacity(xi.intervals() + 1);
    out.push(g.clone());
    for i in 0..xi.intervals() {
        let t0 = i as f64 * dt;
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            let theta = match method {
                EvolveMethod::Midpoint => xi.value_in(i, t + 0.5 * h) * h,
                EvolveMethod::Rkmk4 => rkmk4_increment(
                    model,
                    h,
                    &xi.value_in(i, t),
                    &xi.value_in(i, t + 0.5 * h),
                    &xi.value_in(i, t + h),
                )?,
            };
            g = model.multiply(&model.exp(&theta)?, &g)?;
        }
        out.push(g.clone());
    }
    Ok(out)
}

const FLOW_S_STEP: f64 = 1e-3;

/// `V(t) = d/ds kappa(exp(-tX) exp(sY) exp(tX))` at `s = 0`, fourth-order stencil in `s`.
fn pulled_back(model: &GroupModel, ex: &GroupPoint, ex_inv: &GroupPoint, y: &AlgebraVector) -> Result<DVector<f64>> {
    let at = |s: f64| -> Result<DVector<f64>> {
        model.chart(&model.multiply(&model.multiply(ex_inv, &model.exp(&(y * s))?)?, ex)?)
    };
    let s = FLOW_S_STEP;
    Ok(((at(s)? - at(-s)?) * 8.0 - (at(2.0 * s)? - at(-2.0 * s)?)) / (12.0 * s))
}

fn symmetric_difference(model: &GroupModel, x: &AlgebraVector, y: &AlgebraVector, t: f64) -> Result<DVector<f64>> {
    let fwd = model.exp(&(x * t))?;
    let bwd = model.exp(&(x * -t))?;
    Ok((pulled_back(model, &fwd, &bwd, y)? - pulled_back(model, &bwd, &fwd, y)?) / (2.0 * t))
}

/// `[X, Y] = -d/dt (Fl_t^{R_X})^* R_Y (e)`, with the pulled-back field
/// evaluated through the chart, a symmetric difference in `t` and one
/// Richardson step (`t` and `t/2`), leaving an `O(t^4)` error.
pub fn bracket_via_flows(model: &GroupModel, x: &AlgebraVector, y: &AlgebraVector, t: f64) -> Result<AlgebraVector> {
    model.check_algebra(x)?;
    model.check_algebra(y)?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput("flow step must be positive".into()));
    }
    let d1 = symmetric_difference(model, x, y, t)?;
    let d2 = symmetric_difference(model, x, y, 0.5 * t)?;
    let r = -(d2 * 4.0 - d1) / 3.0;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FlowDiverged("pulled-back field is not finite".into()));
    }
    Ok(r)
}

/// Convergence of [`bracket_via_flows`] towards [`GroupModel::bracket`].
#[derive(Clone, Debug, Serialize)]
pub struct BracketStudy {
    pub model: String,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// `log2(e(t) / e(t/2))` for consecutive steps; `None` when both errors
    /// sit at the roundoff floor.
    pub orders: Vec<Option<f64>>,
    pub final_step: f64,
    pub final_error: f64,
}

/// Errors below this are treated as exact when measuring orders.
pub const BRACKET_ERROR_FLOOR: f64 = 1e-11;

impl BracketStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn bracket_flow_study(
    model: &GroupModel,
    x: &AlgebraVector,
    y: &AlgebraVector,
    steps: &[f64],
    final_step: f64,
) -> Result<BracketStudy> {
    let exact = model.bracket(x, y)?;
    let mut errors = Vec::with_capacity(steps.len());
    for &t in steps {
        errors.push((bracket_via_flows(model, x, y, t)? - &exact).amax());
    }
    let orders = errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, t)| {
            if e[0] <= BRACKET_ERROR_FLOOR && e[1] <= BRACKET_ERROR_FLOOR {
                None
            } else {
                Some((e[0] / e[1].max(f64::MIN_POSITIVE)).ln() / (t[0] / t[1]).ln())
            }
        })
        .collect();
    let final_error = (bracket_via_flows(model, x, y, final_step)? - &exact).amax();
    Ok(BracketStudy { model: model.name(), steps: steps.to_vec(), errors, orders, final_step, final_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::rotation;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_control_stays_at_identity() {
        let g = GroupModel::so3();
        let xs = evolve(&g, &ControlPath::zero(3, 4), 0.05).unwrap();
        assert_eq!(xs.len(), 5);
        assert!(xs.iter().all(|p| p.max_abs_diff(&g.identity()) == 0.0));
    }

    #[test]
    fn constant_control_gives_exponential() {
        let g = GroupModel::so3();
        let u = DVector::from_vec(vec![0.0, 0.0, FRAC_PI_2]);
        let xs = evolve(&g, &ControlPath::constant(&u, 10), 1e-3).unwrap();
        let expected = GroupPoint::Matrix(rotation::exp(3, &u));
        assert!(xs[10].max_abs_diff(&expected) < 1e-8);
    }

    #[test]
    fn translation_control_on_semidirect() {
        let g = GroupModel::special_euclidean(2);
        let u = DVector::from_vec(vec![0.0, 1.0, -2.0]);
        let xs = evolve(&g, &ControlPath::constant(&u, 4), 0.01).unwrap();
        for (i, p) in xs.iter().enumerate() {
            let t = i as f64 / 4.0;
            let expected = GroupPoint::pair(GroupModel::so2().identity(), GroupPoint::vector(&[t, -2.0 * t]));
            assert!(p.max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn step_must_divide_spacing() {
        let g = GroupModel::so3();
        assert!(matches!(evolve(&g, &ControlPath::zero(3, 4), 0.03), Err(Error::StepRejected(_))));
    }

    #[test]
    fn bracket_via_flows_on_so3() {
        let g = GroupModel::so3();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let b = bracket_via_flows(&g, &e1, &e2, 1e-2).unwrap();
        assert!((b - DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-3);
        assert!(bracket_via_flows(&g, &e1, &e1, 1e-2).unwrap().amax() < 1e-9);
    }
}
