//! Scalar abstraction for the generic numerical kernels.
//!
//! Geometry, grading, the absorbing profile, the stabilized differences and the
//! special functions are written once over [`Real`] and instantiated for `f64`
//! in production, `f32` for smoke tests and `twofloat::TwoFloat`
//! (double-double) in the property tests.

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumCast};
use std::fmt::Debug;

/// Real scalar usable by the generic kernels.
pub trait Real: Float + FloatConst + Debug + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only if the target cannot represent it.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal not representable")
    }

    /// Converts a signed integer exactly (within the mantissa range).
    #[inline]
    fn of_int(n: i64) -> Self {
        <Self as NumCast>::from(n).expect("integer not representable")
    }

    /// Lossy conversion to `f64` for diagnostics.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FloatConst + Debug + Send + Sync + 'static {}

/// Complex value over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub(crate) fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Euler–Mascheroni constant split into a leading `f64` and a correction, so
/// extended-precision scalars receive the full value.
pub(crate) fn euler_gamma<T: Real>() -> T {
    T::of(0.5772156649015329) + T::of(-4.942915152430645e-18)
}
