//! Closed forms for SO(2) and SO(3): hat/vee, Rodrigues exponential,
//! logarithm and the right-trivialized differential of `exp`.

use nalgebra::{DMatrix, DVector};

pub fn algebra_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Skew matrix of an algebra vector. For SO(3), `hat(e1) hat(e2) - hat(e2) hat(e1) = hat(e3)`.
pub fn hat(n: usize, v: &DVector<f64>) -> DMatrix<f64> {
    match n {
        2 => DMatrix::from_row_slice(2, 2, &[0.0, -v[0], v[0], 0.0]),
        3 => DMatrix::from_row_slice(3, 3, &[0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0]),
        _ => unreachable!("rotation models are SO(2) and SO(3)"),
    }
}

/// Inverse of [`hat`] applied to the skew part of `m`.
pub fn vee(n: usize, m: &DMatrix<f64>) -> DVector<f64> {
    match n {
        2 => DVector::from_vec(vec![0.5 * (m[(1, 0)] - m[(0, 1)])]),
        3 => DVector::from_vec(vec![
            0.5 * (m[(2, 1)] - m[(1, 2)]),
            0.5 * (m[(0, 2)] - m[(2, 0)]),
            0.5 * (m[(1, 0)] - m[(0, 1)]),
        ]),
        _ => unreachable!("rotation models are SO(2) and SO(3)"),
    }
}

pub fn exp(n: usize, v: &DVector<f64>) -> DMatrix<f64> {
    match n {
        2 => {
            let (s, c) = v[0].sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        }
        3 => {
            let k = hat(3, v);
            let theta = v.norm();
            let (a, b) = if theta < 1e-4 {
                let t2 = theta * theta;
                (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
            } else {
                (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
            };
            DMatrix::identity(3, 3) + &k * a + &k * &k * b
        }
        _ => unreachable!("rotation models are SO(2) and SO(3)"),
    }
}

/// Principal logarithm; the rotation angle is returned in `[0, pi]`.
pub fn log(n: usize, r: &DMatrix<f64>) -> DVector<f64> {
    match n {
        2 => DVector::from_vec(vec![r[(1, 0)].atan2(r[(0, 0)])]),
        3 => {
            let skew = vee(3, r);
            let s = skew.norm();
            let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
            let theta = s.atan2(c);
            if theta < 1e-6 {
                return skew * (1.0 + theta * theta / 6.0);
            }
            if std::f64::consts::PI - theta > 1e-6 {
                return skew * (theta / s);
            }
            // Near pi: the axis comes from the symmetric part R + I = 2 a a^T (approximately).
            let b = (r + DMatrix::identity(3, 3)) * 0.5;
            let mut best = 0;
            for i in 1..3 {
                if b[(i, i)] > b[(best, best)] {
                    best = i;
                }
            }
            let mut axis = b.column(best).into_owned();
            axis /= axis.norm();
            if axis.dot(&skew) < 0.0 {
                axis = -axis;
            }
            axis * theta
        }
        _ => unreachable!("rotation models are SO(2) and SO(3)"),
    }
}

/// `dexp_z = sum_k ad_z^k / (k+1)!`, so that `exp(z + e a) exp(-z) = exp(e dexp_z a + O(e^2))`.
pub fn dexp(n: usize, z: &DVector<f64>) -> DMatrix<f64> {
    match n {
        2 => DMatrix::identity(1, 1),
        3 => {
            let k = hat(3, z);
            let theta = z.norm();
            let (a, b) = if theta < 1e-4 {
                let t2 = theta * theta;
                (0.5 - t2 / 24.0 + t2 * t2 / 720.0, 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0)
            } else {
                let t2 = theta * theta;
                ((1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
            };
            DMatrix::identity(3, 3) + &k * a + &k * &k * b
        }
        _ => unreachable!("rotation models are SO(2) and SO(3)"),
    }
}

pub fn is_rotation(r: &DMatrix<f64>, tol: f64) -> bool {
    let n = r.nrows();
    if r.ncols() != n {
        return false;
    }
    let orth = (r.transpose() * r - DMatrix::identity(n, n)).abs().max();
    orth <= tol && (r.clone().determinant() - 1.0).abs() <= tol.max(1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exp_log_roundtrip() {
        for v in [
            DVector::from_vec(vec![0.3, -0.2, 0.9]),
            DVector::from_vec(vec![1e-7, 0.0, 2e-7]),
            DVector::from_vec(vec![0.0, 0.0, PI - 1e-9]),
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
        ] {
            let back = log(3, &exp(3, &v));
            assert!((back - &v).norm() < 1e-7, "{v}");
        }
    }

    #[test]
    fn dexp_matches_finite_differences() {
        let z = DVector::from_vec(vec![0.4, -0.7, 0.2]);
        let a = DVector::from_vec(vec![0.1, 0.3, -0.5]);
        let e = 1e-6;
        let plus = log(3, &(exp(3, &(&z + &a * e)) * exp(3, &(-&z))));
        let minus = log(3, &(exp(3, &(&z - &a * e)) * exp(3, &(-&z))));
        let fd = (plus - minus) / (2.0 * e);
        assert!((fd - dexp(3, &z) * a).norm() < 1e-8);
    }
}
