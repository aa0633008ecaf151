//! Scalar abstraction shared by the numeric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the numeric core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Mantissa agreement below which two towers of equal height compare equal.
    fn eq_tolerance() -> Self;

    /// Magnitudes above this are treated as unrepresentable for plain evaluation.
    fn plain_limit() -> Self;

    /// Natural log of the smallest positive normal value; `exp` below it underflows.
    fn exp_underflow() -> Self;

    /// Natural log of the largest finite value; `exp` above it overflows.
    fn exp_overflow() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn eq_tolerance() -> Self {
        1e-9
    }
    fn plain_limit() -> Self {
        1e300
    }
    fn exp_underflow() -> Self {
        -708.0
    }
    fn exp_overflow() -> Self {
        709.0
    }
}

impl Scalar for f32 {
    fn eq_tolerance() -> Self {
        1e-5
    }
    fn plain_limit() -> Self {
        1e36
    }
    fn exp_underflow() -> Self {
        -87.0
    }
    fn exp_overflow() -> Self {
        88.0
    }
}
