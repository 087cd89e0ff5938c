//! Floating point abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the numerics are generic over: `f32` or `f64`.
///
/// Tolerances that are meaningful in `f64` (1e-10 and below) are clamped
/// from below by [`Real::floor_tol`] so that `f32` instances stay usable.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(tol, 1000 * machine epsilon)`.
    #[inline]
    fn floor_tol(tol: f64) -> Self {
        Self::lit(tol).max(Self::epsilon() * Self::lit(1e3))
    }
}

impl Real for f32 {}
impl Real for f64 {}
