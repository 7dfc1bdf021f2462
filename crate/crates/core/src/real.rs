//! Scalar abstraction shared by every numerical module.
//!
//! Everything physical in the crate is written against [`Real`], which is
//! satisfied by `f32` and `f64`. SI-unit computations only make sense in
//! `f64` (products such as `ħ·M·ω` underflow single precision); the
//! dimensionless machinery (phase-space words, pulse timing) works in both.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the physics modules.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal or constant into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        nalgebra::convert(value)
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `exp(iθ)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Modulus of a complex number without requiring `num_traits::Float`.
#[inline]
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Argument of a complex number in `(-π, π]`.
#[inline]
pub fn argument<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut w = theta - two_pi * (theta / two_pi).round();
    if w <= -T::pi() {
        w += two_pi;
    }
    w
}
