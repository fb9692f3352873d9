//! Regularity bookkeeping along Sobolev geodesics of circle diffeomorphisms.

use super::{shoot, Metric};
use crate::error::{Error, Result};
use crate::groups::{regularity_decay, AlgebraVector, DiffeoModel, GroupModel};
use serde::Serialize;

/// Largest admissible spread of the velocity decay exponent.
pub const EXPONENT_SPREAD_TOL: f64 = 0.5;
/// Bound on high-mode content (relative to `|u0|`) when `u0` has no
/// measurable decay, i.e. is a finite expansion.
pub const HIGH_MODE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    /// Decay exponent of the coefficients of `u(t)`.
    pub velocity_exponent: Option<f64>,
    pub velocity_residual: Option<f64>,
    /// Decay exponent of the coefficients of `phi(t) - id`; not fitted at `t = 0`.
    pub group_exponent: Option<f64>,
    /// Largest coefficient above mode `N/2`, relative to `|u0|`.
    pub high_mode_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoLossReport {
    pub checkpoints: Vec<Checkpoint>,
    /// `max - min` of the velocity exponents, when `u0` has one.
    pub exponent_spread: Option<f64>,
    pub max_high_mode_ratio: f64,
    pub energy_drift: f64,
    pub trivial: bool,
    pub pass: bool,
}

fn high_mode_ratio(u: &AlgebraVector, scale: f64) -> f64 {
    let n = (u.len() - 1) / 2;
    let max = u.iter().enumerate().filter(|(i, _)| DiffeoModel::mode_of(*i) > n / 2).map(|(_, v)| v.abs()).fold(0.0, f64::max);
    max / scale
}

/// Shoots from `u0` and fits decay exponents at `t = 0, T/4, T/2, 3T/4, T`.
/// Passes when the velocity exponent varies by at most 0.5; if `u0` is a
/// finite expansion without a measurable exponent, passes when modes above
/// `N/2` stay below `1e-8 |u0|`.
pub fn no_loss_no_gain_check(metric: &Metric, u0: &AlgebraVector, t_end: f64, h: f64) -> Result<NoLossReport> {
    if !matches!(metric.model(), GroupModel::FourierDiffeo(_)) {
        return Err(Error::InvalidInput("regularity check needs a circle diffeomorphism model".into()));
    }
    metric.model().check_algebra(u0)?;
    let scale = u0.amax();
    if scale == 0.0 {
        let checkpoints = (0..5)
            .map(|k| Checkpoint {
                t: t_end * k as f64 / 4.0,
                velocity_exponent: None,
                velocity_residual: None,
                group_exponent: None,
                high_mode_ratio: 0.0,
            })
            .collect();
        return Ok(NoLossReport {
            checkpoints,
            exponent_spread: None,
            max_high_mode_ratio: 0.0,
            energy_drift: 0.0,
            trivial: true,
            pass: true,
        });
    }
    let measurable = match regularity_decay(u0) {
        Ok(_) => true,
        Err(Error::InsufficientModes { .. }) => false,
        Err(e) => return Err(e),
    };
    let traj = shoot(metric, u0, t_end, h)?;
    let mut checkpoints = Vec::with_capacity(5);
    for k in 0..5 {
        let t = t_end * k as f64 / 4.0;
        let s = traj.at(t);
        let (ve, vr) = if measurable {
            let fit = regularity_decay(&s.u)?;
            (Some(fit.exponent), Some(fit.residual))
        } else {
            (None, None)
        };
        let group_exponent = if k == 0 { None } else { regularity_decay(&s.g.coords().into()).ok().map(|f| f.exponent) };
        checkpoints.push(Checkpoint {
            t: s.t,
            velocity_exponent: ve,
            velocity_residual: vr,
            group_exponent,
            high_mode_ratio: high_mode_ratio(&s.u, scale),
        });
    }
    let max_high_mode_ratio = checkpoints.iter().map(|c| c.high_mode_ratio).fold(0.0, f64::max);
    let exps: Vec<f64> = checkpoints.iter().filter_map(|c| c.velocity_exponent).collect();
    let exponent_spread = if exps.is_empty() {
        None
    } else {
        Some(exps.iter().cloned().fold(f64::MIN, f64::max) - exps.iter().cloned().fold(f64::MAX, f64::min))
    };
    let pass = match exponent_spread {
        Some(s) => s <= EXPONENT_SPREAD_TOL,
        None => max_high_mode_ratio <= HIGH_MODE_TOL,
    };
    Ok(NoLossReport {
        checkpoints,
        exponent_spread,
        max_high_mode_ratio,
        energy_drift: traj.max_energy_drift,
        trivial: false,
        pass,
    })
}
