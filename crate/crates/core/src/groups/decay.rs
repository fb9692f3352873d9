//! Power-law fit of Fourier coefficient decay, a finite shadow of Sobolev regularity.

use crate::error::{Error, Result};
use nalgebra::DVector;
use serde::Serialize;

/// Coefficients below this magnitude are treated as absent.
pub const DECAY_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Slope of `log |c(n)|` against `log n`.
    pub exponent: f64,
    /// Root mean square of the fit residuals in log space.
    pub residual: f64,
    pub modes_used: usize,
}

/// Least-squares slope of `log |c(n)|` over modes `n` in `[N/4, N]`, with
/// `|c(n)| = sqrt(a_n^2 + b_n^2)` from the packed layout of [`DiffeoModel`].
pub fn regularity_decay(coeffs: &DVector<f64>) -> Result<DecayFit> {
    if coeffs.len().is_multiple_of(2) {
        return Err(Error::InvalidInput("packed Fourier vectors have odd length".into()));
    }
    let n = (coeffs.len() - 1) / 2;
    if n < 8 {
        return Err(Error::InsufficientModes { usable: n });
    }
    let lo = n.div_ceil(4);
    let mut pts = Vec::new();
    for k in lo.max(1)..=n {
        let mag = coeffs[2 * k - 1].hypot(coeffs[2 * k]);
        if mag >= DECAY_FLOOR {
            pts.push(((k as f64).ln(), mag.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientModes { usable: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayFit { exponent: slope, residual, modes_used: pts.len() })
}

/// Packed coefficients with cosine amplitudes `amp(n)` and zero sine parts.
pub fn synthesize(n: usize, amp: impl Fn(usize) -> f64) -> DVector<f64> {
    let mut c = DVector::zeros(2 * n + 1);
    for k in 1..=n {
        c[2 * k - 1] = amp(k);
    }
    c
}
