//! Floating-point abstraction shared by the numerical core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the numerical core is generic over.
///
/// The associated constants are the tolerances used throughout the crate.
/// `f64` carries the documented values; `f32` carries loosened ones so the
/// same algorithms stay usable at single precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Half-width of the band around |z| = 1 that counts as "on the circle".
    const CIRCLE_TOL: Self;
    /// Relative root distance below which a pole and a zero cancel.
    const CANCEL_TOL: Self;
    /// Relative distance used to group numerically repeated roots.
    const CLUSTER_TOL: Self;
    /// Relative step size at which the root iteration stops.
    const STEP_TOL: Self;
    /// Coefficients this small relative to the largest one are treated as zero
    /// when they stand in the way of cancelling a pure delay.
    const NEGLIGIBLE: Self;
    /// Largest acceptable 1-norm condition number for a linear solve.
    const COND_LIMIT: Self;
    /// Relative update size at which the Stein doubling iteration stops.
    const STEIN_TOL: Self;
    /// Largest accepted Bezout residual of a coprime factorization.
    const BEZOUT_TOL: Self;

    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const CIRCLE_TOL: Self = 1e-9;
    const CANCEL_TOL: Self = 1e-8;
    const CLUSTER_TOL: Self = 1e-6;
    const STEP_TOL: Self = 1e-13;
    const NEGLIGIBLE: Self = 1e-11;
    const COND_LIMIT: Self = 1e12;
    const STEIN_TOL: Self = 1e-14;
    const BEZOUT_TOL: Self = 1e-8;
}

impl Scalar for f32 {
    const CIRCLE_TOL: Self = 1e-4;
    const CANCEL_TOL: Self = 1e-3;
    const CLUSTER_TOL: Self = 3e-3;
    const STEP_TOL: Self = 1e-6;
    const NEGLIGIBLE: Self = 1e-5;
    const COND_LIMIT: Self = 1e6;
    const STEIN_TOL: Self = 1e-7;
    const BEZOUT_TOL: Self = 1e-4;
}
