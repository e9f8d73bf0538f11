//! Standard initial and forcing fields on the unit torus.

use crate::scalar::{lit, Scalar};
use crate::wdomain::VelocityField;

/// `A·(sin 2πx cos 2πy, -cos 2πx sin 2πy)`.
pub fn taylor_green<T: Scalar>(n: usize, amplitude: T) -> VelocityField<T> {
    let two_pi = T::two_pi();
    VelocityField::from_fn(n, |x, y| {
        (
            amplitude * (two_pi * x).sin() * (two_pi * y).cos(),
            -amplitude * (two_pi * x).cos() * (two_pi * y).sin(),
        )
    })
}

/// Shear forcing `A·(sin 2πky, 0)`.
pub fn kolmogorov<T: Scalar>(n: usize, amplitude: T, wavenumber: usize) -> VelocityField<T> {
    let k: T = lit(wavenumber as f64);
    let two_pi = T::two_pi();
    VelocityField::from_fn(n, |_, y| (amplitude * (two_pi * k * y).sin(), T::zero()))
}
