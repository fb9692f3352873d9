//! Numerical laboratory for right-invariant geometry on half-Lie groups.
//!
//! * [`jets`]: truncated jet calculus (composition, evaluation, inversion, norms).
//! * [`groups`]: desk-scale group models, brackets, evolution and extension data.
//! * [`riemann`]: right-invariant metrics, Euler-Arnold shooting, chart geodesics.
//! * [`bvp`]: energy-minimizing geodesic boundary value problems and probes.
//! * [`curvature`]: sectional curvature from force and stress, with a Riemann-tensor oracle.
//! * [`harness`]: configuration-driven experiment runner behind the `halflie` binary.

pub mod bvp;
pub mod curvature;
pub mod error;
pub mod groups;
pub mod harness;
pub mod jets;
pub mod riemann;
pub mod scalar;

pub use error::{Error, Result};
