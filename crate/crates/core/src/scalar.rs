//! The floating-point scalar the numerical core is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point: `f32` or `f64`.
///
/// Besides the usual numeric traits this carries the two magnitude
/// thresholds that depend on the precision of the type.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative distance `|z - Z_i| / (1 + |z|)` under which `z` counts as a root.
    fn pole_rtol() -> Self;

    /// Distances below this are treated as overflow of `1 / (z - Z_i)`.
    fn overflow_guard() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn pole_rtol() -> Self {
        1e-5
    }
    fn overflow_guard() -> Self {
        1e-37
    }
}

impl Scalar for f64 {
    fn pole_rtol() -> Self {
        1e-13
    }
    fn overflow_guard() -> Self {
        1e-300
    }
}

/// Convert a complex number between scalar types.
#[inline]
pub fn cast_complex<S: Scalar, T: Scalar>(z: Complex<S>) -> Complex<T> {
    Complex::new(T::lit(z.re.as_f64()), T::lit(z.im.as_f64()))
}
