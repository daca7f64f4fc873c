//! Dense reference linear algebra for tests, backed by `faer` so that the
//! oracles share no code path with the library under test.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex;

pub type CMat = DMatrix<Complex<f64>>;

/// Thin SVD `(U, sigma, V)` with `sigma` non-increasing.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let a = Mat::<Complex<f64>>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = a.thin_svd().expect("faer svd");
    let k = rows.min(cols);
    let u = DMatrix::from_fn(rows, k, |i, j| dec.U()[(i, j)]);
    let v = DMatrix::from_fn(cols, k, |i, j| dec.V()[(i, j)]);
    let sigma: Vec<f64> = (0..k).map(|i| dec.S()[i].re).collect();
    debug_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
    (u, sigma, v)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).1
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Best rank-`r` approximation `D_r m`.
pub fn truncate(m: &CMat, r: usize) -> CMat {
    let (u, s, v) = svd(m);
    let mut us = u.columns(0, r).into_owned();
    for j in 0..r {
        us.column_mut(j).iter_mut().for_each(|c| *c *= s[j]);
    }
    us * v.columns(0, r).adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs() {
        let m = DMatrix::from_fn(5, 3, |i, j| Complex::new((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let (u, s, v) = svd(&m);
        let d = DMatrix::from_fn(3, 3, |i, j| if i == j { Complex::new(s[i], 0.0) } else { Complex::new(0.0, 0.0) });
        assert!((u * d * v.adjoint() - &m).norm() < 1e-12 * m.norm());
        assert!((truncate(&m, 3) - &m).norm() < 1e-12 * m.norm());
    }
}
