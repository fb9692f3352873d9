//! Field abstraction so the jet algebra runs on `f64` or on exact rationals.

use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use std::fmt::Debug;
use std::ops::Neg;

/// Exact rational scalar used by the jet algebra's rational mode.
pub type Rational = BigRational;

pub trait Scalar:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    /// Exact binary expansion of a finite float.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn from_i64(x: i64) -> Self {
        <BigRational as num_traits::FromPrimitive>::from_i64(x).expect("integer")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
