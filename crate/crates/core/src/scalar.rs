//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All algorithms are written against [`Real`], which is satisfied by `f32`
//! and `f64`. Complex samples are `num_complex::Complex<T>`, the same type
//! `nalgebra` and `rustfft` operate on.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use rustfft::FftNum;

pub use num_complex::Complex;

/// Floating point type usable by the FFT kernels and the dense factorizations.
pub trait Real: RealField + FftNum + Copy + Display + LowerExp + Debug {
    /// Converts an `f64` literal or statistic into this type.
    fn lit(v: f64) -> Self {
        nalgebra::convert(v)
    }

    /// Lossy conversion to `f64` for reporting.
    fn as_f64(self) -> f64 {
        nalgebra::try_convert(self).unwrap_or(f64::NAN)
    }

    /// Converts a count.
    fn from_count(v: usize) -> Self {
        Self::lit(v as f64)
    }

    fn epsilon() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Euclidean norm of a complex slice, scaled to avoid overflow.
pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    let scale = v.iter().fold(T::zero(), |m, c| m.max(c.re.abs()).max(c.im.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let sum = v.iter().fold(T::zero(), |acc, c| {
        let re = c.re / scale;
        let im = c.im / scale;
        acc + re * re + im * im
    });
    scale * sum.sqrt()
}

/// Largest modulus in a complex slice (0 for an empty slice).
pub fn norm_inf<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(modulus(*c)))
}

/// Complex modulus `|c|`.
#[inline]
pub fn modulus<T: Real>(c: Complex<T>) -> T {
    c.re.hypot(c.im)
}

