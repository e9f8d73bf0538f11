//! Scalar abstraction shared by every numerical module.
//!
//! All kernels are written against [`Scalar`] so the same code runs in `f32`
//! and `f64`. Special functions that have no generic implementation (Gamma)
//! are evaluated in `f64` and converted back.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Machine epsilon of the type.
    fn eps() -> Self;

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a count or index into the working scalar.
#[inline]
pub fn from_usize<T: Scalar>(k: usize) -> T {
    nalgebra::convert(k as f64)
}

/// Gamma function.
pub fn gamma<T: Scalar>(x: T) -> T {
    lit(libm::tgamma(x.to_f64_lossy()))
}

/// True when every entry is finite.
pub fn all_finite<T: Scalar>(xs: &[T]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Fixed-order dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Formats a float with 17 significant digits, the precision used by every
/// CSV written by this crate.
pub fn fmt_full<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}
