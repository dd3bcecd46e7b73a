//! Scalar abstraction shared by every module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the engine is generic over (`f32` or `f64`).
///
/// `Float` and `Signed` (pulled in by `FftNum`) both define `abs` and
/// `signum`, so call those through `Float::abs(x)` in generic code.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Display + Debug + Sum + Send + Sync + 'static
{
    /// Relative precision below which results are treated as rounding noise.
    const NOISE: f64;
}

impl Real for f64 {
    const NOISE: f64 = 1e-13;
}

impl Real for f32 {
    const NOISE: f64 = 1e-5;
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable")
}

/// Converts `T` to `f64` (exact for both supported types).
#[inline]
pub fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite")
}

#[inline]
pub fn abs<T: Real>(x: T) -> T {
    Float::abs(x)
}
