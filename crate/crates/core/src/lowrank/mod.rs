//! Factored rank-`r` matrices, tangent-space projection and the two routes to
//! a rank-`r` truncation used by the recovery loop: the accelerated update
//! restricted to the tangent space and a Lanczos truncated SVD that touches
//! `H(w)` only through fast products.

mod dense;
mod lanczos;
mod svd;
mod tangent;

pub use lanczos::{truncated_svd_hankel, truncated_svd_with, LanczosOptions, DEFAULT_LANCZOS_TOL};
pub use svd::{jacobi_svd, DenseSvd};
pub use tangent::{accelerated_rank_r, accelerated_rank_r_with, tangent_project_dense, TangentSpace};
pub(crate) use tangent::accelerated_step;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{czero, Complex, Real};

/// `L = U diag(sigma) V*` with orthonormal `U` (`n1 × r`) and `V` (`n2 × r`).
///
/// Trailing zero singular values are kept, so the width stays `r` even when
/// the represented matrix has lower rank.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredRankR<T: Real> {
    pub u: DMatrix<Complex<T>>,
    pub sigma: Vec<T>,
    pub v: DMatrix<Complex<T>>,
}

impl<T: Real> FactoredRankR<T> {
    /// Validates widths and the ordering of `sigma`.
    pub fn new(u: DMatrix<Complex<T>>, sigma: Vec<T>, v: DMatrix<Complex<T>>) -> Result<Self, T> {
        let r = sigma.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(Error::shape(
                format!("U and V with {r} columns"),
                format!("{} and {}", u.ncols(), v.ncols()),
            ));
        }
        if u.nrows() == 0 || v.nrows() == 0 {
            return Err(Error::InvalidSize("factor with zero rows".into()));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < T::zero())
            || sigma.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::InvalidInput(
                "singular values must be finite, nonnegative and non-increasing".into(),
            ));
        }
        Ok(Self { u, sigma, v })
    }

    /// The zero matrix of width `r`, with coordinate vectors as factors.
    pub fn zeros(n1: usize, n2: usize, r: usize) -> Self {
        assert!(r <= n1.min(n2), "rank exceeds min(n1, n2)");
        let eye = |rows: usize| {
            DMatrix::from_fn(rows, r, |i, j| {
                if i == j {
                    Complex::new(T::one(), T::zero())
                } else {
                    czero()
                }
            })
        };
        Self {
            u: eye(n1),
            sigma: vec![T::zero(); r],
            v: eye(n2),
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.nrows())
    }

    /// Largest singular value (0 when `r = 0`).
    pub fn sigma1(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    pub fn tangent(&self) -> TangentSpace<'_, T> {
        TangentSpace {
            u: &self.u,
            v: &self.v,
        }
    }

    /// Dense `U Σ V*`. Test oracle only.
    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|c| *c = c.scale(s));
        }
        us * self.v.adjoint()
    }

    /// `max(‖U*U − I‖_F, ‖V*V − I‖_F)`.
    pub fn orthonormality_error(&self) -> T {
        gram_error(&self.u).max(gram_error(&self.v))
    }
}

fn gram_error<T: Real>(q: &DMatrix<Complex<T>>) -> T {
    let mut g = q.adjoint() * q;
    for i in 0..g.nrows() {
        g[(i, i)] -= Complex::new(T::one(), T::zero());
    }
    g.iter()
        .fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im)
        .sqrt()
}

/// Largest squared row norm, `‖Q‖²_{2,∞}`.
pub(crate) fn max_row_norm_sq<T: Real>(q: &DMatrix<Complex<T>>) -> T {
    (0..q.nrows())
        .map(|i| {
            q.row(i)
                .iter()
                .fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im)
        })
        .fold(T::zero(), |m, v| m.max(v))
}

/// Empirical incoherence `μ̂ = n/(c_s r) · max(‖U‖²_{2,∞}, ‖V‖²_{2,∞})`.
pub fn incoherence<T: Real>(l: &FactoredRankR<T>) -> T {
    let (n1, n2) = l.dims();
    let r = l.rank();
    if r == 0 {
        return T::zero();
    }
    let n = (n1 + n2 - 1) as f64;
    let c_s = (n / n1 as f64).max(n / n2 as f64);
    let spike = max_row_norm_sq(&l.u).max(max_row_norm_sq(&l.v));
    T::lit(n / (c_s * r as f64)) * spike
}

/// Rank-`r` truncation of a dense matrix via [`jacobi_svd`].
pub fn dense_truncated_svd<T: Real>(m: &DMatrix<Complex<T>>, r: usize) -> FactoredRankR<T> {
    assert!(r <= m.nrows().min(m.ncols()), "rank exceeds matrix dimensions");
    let svd = jacobi_svd(m);
    FactoredRankR {
        u: svd.u.columns(0, r).into_owned(),
        sigma: svd.sigma[..r].to_vec(),
        v: svd.v.columns(0, r).into_owned(),
    }
}
