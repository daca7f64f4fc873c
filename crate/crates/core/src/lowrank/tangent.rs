use nalgebra::DMatrix;

use super::dense::{adjoint_mul, complement_qr, mul_pair, Complement};
use super::{dense_truncated_svd, FactoredRankR};
use crate::error::{Error, Result};
use crate::hankel::{FactorSpectra, HankelPlan};
use crate::scalar::{czero, Complex, Real};
use crate::signal::ComplexSignal;

/// Column space `U` and row space `V` of a rank-`r` iterate. The tangent space
/// is `{U A* + B V*}`.
#[derive(Clone, Copy, Debug)]
pub struct TangentSpace<'a, T: Real> {
    pub u: &'a DMatrix<Complex<T>>,
    pub v: &'a DMatrix<Complex<T>>,
}

/// `P_T M = U U*M + M V V* − U U*M V V*`, on a dense matrix.
pub fn tangent_project_dense<T: Real>(
    t: TangentSpace<'_, T>,
    m: &DMatrix<Complex<T>>,
) -> Result<DMatrix<Complex<T>>, T> {
    if m.nrows() != t.u.nrows() || m.ncols() != t.v.nrows() {
        return Err(Error::shape(
            format!("{}x{}", t.u.nrows(), t.v.nrows()),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let pu_m = t.u * (t.u.adjoint() * m);
    let m_pv = (m * t.v) * t.v.adjoint();
    let pu_m_pv = (&pu_m * t.v) * t.v.adjoint();
    Ok(pu_m + m_pv - pu_m_pv)
}

/// Rank-`r` truncation of `P_T H(w)` where `T` is the tangent space at
/// `prev`, without forming any `n1 × n2` matrix.
///
/// Builds `C = H(w) V`, `D = H(w)* U`, orthonormal complements `Q1 ⊥ V`,
/// `Q2 ⊥ U` with triangular factors `R1`, `R2`, and truncates the small core
/// `[[U*C, R1*], [R2, 0]]`.
pub fn accelerated_rank_r<T: Real>(
    prev: &FactoredRankR<T>,
    w: &ComplexSignal<T>,
    r: usize,
) -> Result<FactoredRankR<T>, T> {
    let plan = HankelPlan::new(w.len())?;
    accelerated_rank_r_with(&plan, prev, w, r)
}

/// [`accelerated_rank_r`] reusing cached FFT plans.
pub fn accelerated_rank_r_with<T: Real>(
    plan: &HankelPlan<T>,
    prev: &FactoredRankR<T>,
    w: &ComplexSignal<T>,
    r: usize,
) -> Result<FactoredRankR<T>, T> {
    accelerated_step(plan, prev, None, w, r)
}

/// The accelerated update, optionally given the spectra of `prev`'s factors
/// from the `H†` that produced the current iterate.
pub(crate) fn accelerated_step<T: Real>(
    plan: &HankelPlan<T>,
    prev: &FactoredRankR<T>,
    spectra: Option<&FactorSpectra<T>>,
    w: &ComplexSignal<T>,
    r: usize,
) -> Result<FactoredRankR<T>, T> {
    let shape = plan.shape();
    if prev.dims() != (shape.n1, shape.n2) {
        return Err(Error::shape(
            format!("factors of a {}x{} matrix", shape.n1, shape.n2),
            format!("{:?}", prev.dims()),
        ));
    }
    if r != prev.rank() {
        return Err(Error::shape(format!("rank {}", prev.rank()), r));
    }
    if r == 0 {
        return Ok(prev.clone());
    }
    let (u, v) = (&prev.u, &prev.v);
    let op = plan.operator(w)?;
    let (c, d) = match spectra {
        Some(sp) => op.apply_factors(sp),
        None => (op.apply_matrix(v)?, op.apply_adjoint_matrix(u)?),
    };

    let core_tl = adjoint_mul(u, &c);
    // V* D = (U* C)*, so both first projections reuse the same product.
    let right = complement_qr(v, d, Some(&core_tl.adjoint()));
    let left = complement_qr(u, c, Some(&core_tl));

    let (p1, p2) = (right.width(), left.width());
    let mut core = DMatrix::from_element(r + p2, r + p1, czero::<T>());
    core.view_mut((0, 0), (r, r)).copy_from(&core_tl);
    core.view_mut((0, r), (r, p1)).copy_from(&right.r.adjoint());
    core.view_mut((r, 0), (p2, r)).copy_from(&left.r);

    let small = dense_truncated_svd(&core, r);
    Ok(FactoredRankR {
        u: extend(u, &left, &small.u),
        sigma: small.sigma,
        v: extend(v, &right, &small.v),
    })
}

/// `[B | Q] S` with `Q = span · map`, as `[B | span] [S_top; map S_bottom]`.
fn extend<T: Real>(basis: &DMatrix<Complex<T>>, q: &Complement<T>, s: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let k = basis.ncols();
    let bottom = &q.map * s.rows(k, q.width());
    let mut stacked = DMatrix::from_element(k + q.span.ncols(), s.ncols(), czero::<T>());
    stacked.rows_mut(0, k).copy_from(&s.rows(0, k));
    stacked.rows_mut(k, q.span.ncols()).copy_from(&bottom);
    mul_pair(basis, &q.span, &stacked)
}
