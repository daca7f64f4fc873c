use std::ops::{Add, Index, Sub};

use crate::error::{Error, Result};
use crate::scalar::{czero, norm2, norm_inf, Complex, Real};

/// A length-`n` vector of finite complex samples.
///
/// The length is fixed at construction. Arithmetic between signals of
/// different lengths panics; the recovery routines validate lengths up front.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal<T: Real> {
    samples: Vec<Complex<T>>,
}

impl<T: Real> ComplexSignal<T> {
    /// Wraps `samples`, rejecting empty input and NaN/Inf entries.
    pub fn new(samples: Vec<Complex<T>>) -> Result<Self, T> {
        if samples.is_empty() {
            return Err(Error::InvalidSize("signal length must be at least 1".into()));
        }
        if let Some(i) = samples
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { samples })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "signal length must be at least 1");
        Self {
            samples: vec![czero(); n],
        }
    }

    /// Real-valued signal.
    pub fn from_real(values: &[T]) -> Result<Self, T> {
        Self::new(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    /// Canonical basis vector `e_index` of length `n`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut s = Self::zeros(n);
        s.samples[index] = Complex::new(T::one(), T::zero());
        s
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn from_vec_unchecked(samples: Vec<Complex<T>>) -> Self {
        debug_assert!(!samples.is_empty());
        Self { samples }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.samples.iter()
    }

    pub fn norm2(&self) -> T {
        norm2(&self.samples)
    }

    pub fn norm_inf(&self) -> T {
        norm_inf(&self.samples)
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_vec_unchecked(self.samples.iter().map(|c| c.scale(factor)).collect())
    }

    /// `‖self − other‖₂ / ‖other‖₂`, with 0/0 defined as 0.
    pub fn relative_error_to(&self, other: &Self) -> T {
        let denom = other.norm2();
        let num = (self - other).norm2();
        if denom == T::zero() {
            if num == T::zero() {
                T::zero()
            } else {
                T::one() / T::zero()
            }
        } else {
            num / denom
        }
    }
}

impl<T: Real> Index<usize> for ComplexSignal<T> {
    type Output = Complex<T>;

    fn index(&self, i: usize) -> &Complex<T> {
        &self.samples[i]
    }
}

impl<T: Real> Add for &ComplexSignal<T> {
    type Output = ComplexSignal<T>;

    fn add(self, rhs: Self) -> ComplexSignal<T> {
        assert_eq!(self.len(), rhs.len(), "signal length mismatch");
        ComplexSignal::from_vec_unchecked(
            self.iter().zip(rhs.iter()).map(|(a, b)| a + b).collect(),
        )
    }
}

impl<T: Real> Sub for &ComplexSignal<T> {
    type Output = ComplexSignal<T>;

    fn sub(self, rhs: Self) -> ComplexSignal<T> {
        assert_eq!(self.len(), rhs.len(), "signal length mismatch");
        ComplexSignal::from_vec_unchecked(
            self.iter().zip(rhs.iter()).map(|(a, b)| a - b).collect(),
        )
    }
}

impl<T: Real> AsRef<[Complex<T>]> for ComplexSignal<T> {
    fn as_ref(&self) -> &[Complex<T>] {
        &self.samples
    }
}
