//! Floating-point scalar abstraction for the numeric pipeline.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar usable throughout the evaluator and analysis layers.
///
/// Implemented for `f32` and `f64`; all exact cap geometry stays in
/// [`crate::DyadicRational`] and only crosses into a `Scalar` through the
/// explicitly lossy conversions.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must convert")
    }

    fn to_f64c(self) -> f64;
}

impl Scalar for f32 {
    fn to_f64c(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn to_f64c(self) -> f64 {
        self
    }
}

/// e(t) = exp(2πi t), the unit character used by the extension operator.
pub fn e_of<S: Scalar>(t: S) -> num_complex::Complex<S> {
    let (sin, cos) = (t * S::TAU()).sin_cos();
    num_complex::Complex::new(cos, sin)
}
