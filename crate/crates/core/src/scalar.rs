//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Everything in the crate is written against this bound. Tolerances are
/// specified as `f64` literals and converted through [`Real::tol`], which
/// never lets a threshold drop below a few ulps of the active type.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Display + LowerExp + Debug + Send + Sync
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance of `x`, floored at `64·eps`.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(64.0);
        let v = Self::lit(x);
        if v > floor {
            v
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|z|` without relying on `num_traits::Float`.
#[inline]
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// `arg z` in `(-pi, pi]`.
#[inline]
pub fn argument<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// `e^{i phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

#[inline]
pub fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
