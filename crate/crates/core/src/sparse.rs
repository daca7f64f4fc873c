use crate::error::{Error, Result};
use crate::scalar::{czero, modulus, Complex, Real};
use crate::signal::ComplexSignal;

/// Sparse complex vector of length `n`: strictly increasing support with
/// aligned values.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEstimate<T: Real> {
    n: usize,
    support: Vec<usize>,
    values: Vec<Complex<T>>,
}

impl<T: Real> SparseEstimate<T> {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<Complex<T>>) -> Result<Self, T> {
        if support.len() != values.len() {
            return Err(Error::shape(
                format!("{} values", support.len()),
                values.len(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("support must be strictly increasing".into()));
        }
        if support.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidInput(format!("support index out of range 0..{n}")));
        }
        if let Some(i) = values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite(support[i]));
        }
        Ok(Self { n, support, values })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Caller guarantees a sorted in-range support and finite values.
    pub(crate) fn from_parts_unchecked(n: usize, support: Vec<usize>, values: Vec<Complex<T>>) -> Self {
        Self { n, support, values }
    }

    /// Nonzero entries of a dense signal.
    pub fn from_dense(x: &ComplexSignal<T>) -> Self {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != czero())
            .map(|(i, c)| (i, *c))
            .unzip();
        Self {
            n: x.len(),
            support,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex<T>)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> ComplexSignal<T> {
        let mut out = vec![czero(); self.n];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        ComplexSignal::from_vec_unchecked(out)
    }

    /// `‖s‖_∞`.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, c| m.max(modulus(*c)))
    }

    /// Whether every index of `self` also lies in `other`'s support.
    pub fn support_within(&self, other: &Self) -> bool {
        let mut it = other.support.iter().peekable();
        self.support.iter().all(|&i| {
            while it.peek().is_some_and(|&&j| j < i) {
                it.next();
            }
            it.peek() == Some(&&i)
        })
    }

    /// `v − self` as a dense signal.
    pub(crate) fn subtract_from(&self, v: &ComplexSignal<T>) -> ComplexSignal<T> {
        let mut out = v.as_slice().to_vec();
        for (i, s) in self.iter() {
            out[i] -= s;
        }
        ComplexSignal::from_vec_unchecked(out)
    }
}
