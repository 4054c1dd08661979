//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Numerical thresholds used across the solver.
///
/// Defaults are tuned for `f64`; for lower precision types each threshold is
/// raised to a fixed multiple of machine epsilon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Degeneracy floor on |β|; energies with |E − H| ≤ β_min² are rejected.
    pub beta_min: T,
    /// Relative size of the imaginary residue accepted when a value must be real.
    pub reality: T,
    /// Relative mismatch accepted between β² and E − H.
    pub frequency_match: T,
    /// Relative matching-row residual accepted for a matched zero-order state.
    pub matching_residual: T,
    /// Row-equilibrated 1-norm condition number above which a linear solve
    /// is reported as degenerate.
    pub condition_max: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        let floor = |value: f64, multiple: f64| T::lit(value).max(eps * T::lit(multiple));
        Self {
            beta_min: T::lit(1e-8),
            reality: floor(1e-8, 1e4),
            frequency_match: floor(1e-10, 1e3),
            matching_residual: floor(1e-10, 1e4),
            condition_max: T::lit(1e12).min(T::lit(1e-2) / eps),
        }
    }
}
