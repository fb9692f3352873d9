//! Euler-Arnold shooting `u_t = -ad_u^T u` with group reconstruction
//! `gdot = u g`, integrated as one coupled Runge-Kutta-Munthe-Kaas scheme
//! of order four.

use super::Metric;
use crate::error::{Error, Result};
use crate::groups::evolve::dexpinv;
use crate::groups::{regularity_decay, AlgebraVector, GroupModel, GroupPoint};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub t: f64,
    pub g: GroupPoint,
    pub u: AlgebraVector,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub h: f64,
    pub energy0: f64,
    /// `max_t |E(t) - E(0)| / E(0)` (absolute when `E(0) = 0`).
    pub max_energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory has at least one state")
    }

    /// State closest to time `t`.
    pub fn at(&self, t: f64) -> &GeodesicState {
        let i = ((t / self.h).round() as usize).min(self.states.len() - 1);
        &self.states[i]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    /// `BlowUp` once `|u|_A` exceeds this.
    pub ceiling: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { ceiling: 1e6 }
    }
}

fn relative_drift(e0: f64, e: f64) -> f64 {
    if e0 > 0.0 {
        (e - e0).abs() / e0
    } else {
        (e - e0).abs()
    }
}

/// Geodesic through `e` with initial velocity `u0` on `[0, T]`, sampled every `h`.
pub fn shoot(metric: &Metric, u0: &AlgebraVector, t_end: f64, h: f64) -> Result<Trajectory> {
    shoot_with(metric, u0, t_end, h, ShootOptions::default())
}

pub fn shoot_with(metric: &Metric, u0: &AlgebraVector, t_end: f64, h: f64, opts: ShootOptions) -> Result<Trajectory> {
    let model = metric.model();
    model.check_algebra(u0)?;
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::StepRejected(format!("invalid step {h} or horizon {t_end}")));
    }
    let steps = (t_end / h).round().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { h };
    let e0 = metric.energy(u0);
    let mut states = Vec::with_capacity(steps + 1);
    let mut g = model.identity();
    let mut u = u0.clone();
    let mut drift = 0.0f64;
    states.push(GeodesicState { t: 0.0, g: g.clone(), u: u.clone() });
    for i in 0..steps {
        let (un, theta) = coupled_step(metric, model, &u, h)?;
        g = model.multiply(&model.exp(&theta)?, &g)?;
        u = un;
        let t = (i + 1) as f64 * h;
        let e = metric.energy(&u);
        let norm = e.max(0.0).sqrt();
        if !norm.is_finite() || norm > opts.ceiling {
            return Err(Error::BlowUp { t, norm, ceiling: opts.ceiling });
        }
        drift = drift.max(relative_drift(e0, e));
        states.push(GeodesicState { t, g: g.clone(), u: u.clone() });
    }
    Ok(Trajectory { states, h, energy0: e0, max_energy_drift: drift })
}

/// One RK4 step for `u` together with the Munthe-Kaas increment `theta`,
/// `g(t + h) = exp(theta) g(t)`.
fn coupled_step(metric: &Metric, model: &GroupModel, u: &AlgebraVector, h: f64) -> Result<(AlgebraVector, AlgebraVector)> {
    let f1 = metric.euler_arnold(u)?;
    let u2 = u + &f1 * (0.5 * h);
    let f2 = metric.euler_arnold(&u2)?;
    let u3 = u + &f2 * (0.5 * h);
    let f3 = metric.euler_arnold(&u3)?;
    let u4 = u + &f3 * h;
    let f4 = metric.euler_arnold(&u4)?;
    let un = u + (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0);

    let k1 = u.clone();
    let k2 = dexpinv(model, &(&k1 * (0.5 * h)), &u2)?;
    let k3 = dexpinv(model, &(&k2 * (0.5 * h)), &u3)?;
    let k4 = dexpinv(model, &(&k3 * h), &u4)?;
    let theta = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    Ok((un, theta))
}

fn rk4_velocity(metric: &Metric, u: &AlgebraVector, h: f64) -> Result<AlgebraVector> {
    let f1 = metric.euler_arnold(u)?;
    let f2 = metric.euler_arnold(&(u + &f1 * (0.5 * h)))?;
    let f3 = metric.euler_arnold(&(u + &f2 * (0.5 * h)))?;
    let f4 = metric.euler_arnold(&(u + &f3 * h))?;
    Ok(u + (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0))
}

#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub t_final: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub energy0: f64,
    pub max_energy_drift: f64,
    pub max_norm: f64,
}

/// Velocity-only Euler-Arnold integration with step-doubling error control
/// (local error per unit step below `tol`).
pub fn shoot_adaptive(metric: &Metric, u0: &AlgebraVector, t_end: f64, tol: f64, ceiling: f64) -> Result<AdaptiveRun> {
    metric.model().check_algebra(u0)?;
    let e0 = metric.energy(u0);
    let mut run = AdaptiveRun {
        t_final: 0.0,
        accepted: 0,
        rejected: 0,
        energy0: e0,
        max_energy_drift: 0.0,
        max_norm: e0.sqrt(),
    };
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut h = (t_end / 100.0).min(0.01).max(1e-6);
    while t < t_end {
        let step = h.min(t_end - t);
        let big = rk4_velocity(metric, &u, step)?;
        let half = rk4_velocity(metric, &u, 0.5 * step)?;
        let small = rk4_velocity(metric, &half, 0.5 * step)?;
        let scale = 1.0 + u.amax();
        let err = (&small - &big).amax() / (15.0 * scale);
        if err <= tol * step || step < 1e-12 {
            u = &small + (&small - &big) / 15.0;
            t += step;
            run.accepted += 1;
            let e = metric.energy(&u);
            let norm = e.max(0.0).sqrt();
            run.max_norm = run.max_norm.max(norm);
            if !norm.is_finite() || norm > ceiling {
                return Err(Error::BlowUp { t, norm, ceiling });
            }
            run.max_energy_drift = run.max_energy_drift.max(relative_drift(e0, e));
        } else {
            run.rejected += 1;
        }
        let factor = if err > 0.0 { 0.9 * (tol * step / err).powf(0.2) } else { 2.0 };
        h = step * factor.clamp(0.2, 2.0);
    }
    run.t_final = t;
    Ok(run)
}

/// CSV with columns `t, energy, u_0.., g_0.., decay_exponent`; the last
/// column is present only when `with_decay` is set (empty where the fit fails).
pub fn trajectory_csv(metric: &Metric, traj: &Trajectory, with_decay: bool) -> String {
    let mut out = String::new();
    let d = traj.states[0].u.len();
    let gc = traj.states[0].g.coords().len();
    let mut header = vec!["t".to_string(), "energy".to_string()];
    header.extend((0..d).map(|i| format!("u{i}")));
    header.extend((0..gc).map(|i| format!("g{i}")));
    if with_decay {
        header.push("decay_exponent".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for s in &traj.states {
        let mut row = vec![format!("{}", s.t), format!("{:e}", metric.energy(&s.u))];
        row.extend(s.u.iter().map(|v| format!("{v:e}")));
        row.extend(s.g.coords().iter().map(|v| format!("{v:e}")));
        if with_decay {
            row.push(regularity_decay(&s.u).map(|f| format!("{:.6}", f.exponent)).unwrap_or_default());
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::rotation;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bi_invariant_geodesic_is_one_parameter_subgroup() {
        let m = Metric::identity(GroupModel::so3()).unwrap();
        let u0 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let tr = shoot(&m, &u0, FRAC_PI_2, 1e-3).unwrap();
        let expected = GroupPoint::Matrix(rotation::exp(3, &(&u0 * FRAC_PI_2)));
        assert!(tr.last().g.max_abs_diff(&expected) < 1e-12);
        assert!(tr.states.iter().all(|s| (&s.u - &u0).amax() < 1e-15));
    }

    #[test]
    fn principal_axis_is_an_equilibrium() {
        let m = Metric::diagonal(GroupModel::so3(), &[1.0, 2.0, 3.0]).unwrap();
        let u0 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let tr = shoot(&m, &u0, 1.0, 1e-2).unwrap();
        assert!(tr.states.iter().all(|s| (&s.u - &u0).amax() == 0.0));
    }

    #[test]
    fn blow_up_ceiling() {
        let m = Metric::identity(GroupModel::so3()).unwrap();
        let u0 = DVector::from_vec(vec![0.0, 0.0, 10.0]);
        let r = shoot_with(&m, &u0, 0.1, 1e-2, ShootOptions { ceiling: 1.0 });
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
