//! Golub–Kahan–Lanczos bidiagonalization with full reorthogonalization.
//!
//! After `k` steps `H V_k = U_k B_k` holds exactly and
//! `H* U_k = V_k B_kᵀ + β_k v_{k+1} e_kᵀ`, so for a Ritz triplet
//! `(σ, U_k p, V_k q)` the residual of the first relation vanishes and the
//! second equals `|β_k p_k|`. That quantity is the convergence test.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::{axpy as complex_axpy, dot};
use super::{jacobi_svd, FactoredRankR};
use crate::error::{Error, Result};
use crate::hankel::{HankelOperator, HankelPlan};
use crate::scalar::{czero, modulus, norm2, Complex, Real};
use crate::signal::ComplexSignal;

/// Residual tolerance relative to `σ₁` used when none is given.
pub const DEFAULT_LANCZOS_TOL: f64 = 1e-10;

/// Knobs for [`truncated_svd_with`].
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Stop once every wanted Ritz triplet has residual `≤ tol · σ₁`.
    pub tol: f64,
    /// Step cap; `None` means `max(10 r, 100)`.
    pub max_steps: Option<usize>,
    /// Seed for the start vector and breakdown restarts.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_LANCZOS_TOL,
            max_steps: None,
            seed: 0x5eed_1a2c,
        }
    }
}

/// Rank-`r` truncated SVD of `H(w)` using only fast Hankel products.
pub fn truncated_svd_hankel<T: Real>(
    w: &ComplexSignal<T>,
    r: usize,
    tol: T,
) -> Result<FactoredRankR<T>, T> {
    let plan = HankelPlan::new(w.len())?;
    let op = plan.operator(w)?;
    let opts = LanczosOptions {
        tol: tol.as_f64(),
        ..Default::default()
    };
    truncated_svd_with(&op, r, &opts)
}

/// Rank-`r` truncated SVD of a bound Hankel operator.
pub fn truncated_svd_with<T: Real>(
    op: &HankelOperator<'_, T>,
    r: usize,
    opts: &LanczosOptions,
) -> Result<FactoredRankR<T>, T> {
    let (n1, n2) = (op.shape().n1, op.shape().n2);
    if r == 0 || r > n1.min(n2) {
        return Err(Error::InvalidInput(format!(
            "rank {r} outside 1..={}",
            n1.min(n2)
        )));
    }
    let tol = T::lit(opts.tol).max(T::epsilon() * T::lit(100.0));
    let max_steps = opts.max_steps.unwrap_or((10 * r).max(100));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut us: Vec<Vec<Complex<T>>> = Vec::new();
    let mut vs: Vec<Vec<Complex<T>>> = Vec::new();
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut scale = T::zero();

    vs.push(random_unit_orthogonal(n2, &vs, &mut rng));
    let mut best: Option<(FactoredRankR<T>, T)> = None;

    loop {
        let j = alphas.len();
        // Left step: α_j u_j = H v_j − β_{j−1} u_{j−1}.
        let mut p = op.apply(&vs[j])?;
        if j > 0 {
            axpy(-betas[j - 1], &us[j - 1], &mut p);
        }
        reorthogonalize(&mut p, &us);
        let alpha = norm2(&p);
        scale = scale.max(alpha);
        if alpha <= breakdown(scale) {
            alphas.push(T::zero());
            if us.len() == n1 {
                // Left space exhausted: H V_{j+1} = U_j [B_j | β e_j] exactly.
                return Ok(ritz(&us, &vs, &alphas[..j], &betas, r, true));
            }
            us.push(random_unit_orthogonal(n1, &us, &mut rng));
        } else {
            alphas.push(alpha);
            us.push(scaled(&p, T::one() / alpha));
        }

        // Right step: β_j v_{j+1} = H* u_j − α_j v_j.
        let mut q = op.apply_adjoint(&us[j])?;
        axpy(-alphas[j], &vs[j], &mut q);
        reorthogonalize(&mut q, &vs);
        let beta = norm2(&q);
        scale = scale.max(beta);
        let k = j + 1;
        let (next_v, beta) = if beta <= breakdown(scale) {
            (None, T::zero())
        } else {
            (Some(scaled(&q, T::one() / beta)), beta)
        };
        betas.push(beta);

        if k >= r {
            let (factors, residual) = ritz_with_residual(&us, &vs, &alphas, &betas, r);
            let sigma1 = factors.sigma1();
            if residual <= tol * sigma1 {
                return Ok(factors);
            }
            if best.as_ref().is_none_or(|(_, res)| residual < *res) {
                best = Some((factors, residual));
            }
        }
        if k >= max_steps {
            let (best, residual) = best.expect("at least one Ritz estimate when max_steps >= r");
            return Err(Error::Convergence {
                iterations: k,
                residual: residual.as_f64(),
                best: Box::new(best),
            });
        }
        match next_v {
            Some(v) => vs.push(v),
            None => {
                if vs.len() == n2 {
                    // H* U_k = V_k B_kᵀ exactly; the square Ritz pairs are exact.
                    return Ok(ritz(&us, &vs, &alphas, &betas[..k - 1], r, false));
                }
                vs.push(random_unit_orthogonal(n2, &vs, &mut rng));
            }
        }
    }
}

fn breakdown<T: Real>(scale: T) -> T {
    T::epsilon() * T::lit(64.0) * scale
}

/// Builds Ritz factors from the square bidiagonal and returns the largest
/// adjoint residual `|β_k p_{k,i}|` over the wanted triplets.
fn ritz_with_residual<T: Real>(
    us: &[Vec<Complex<T>>],
    vs: &[Vec<Complex<T>>],
    alphas: &[T],
    betas: &[T],
    r: usize,
) -> (FactoredRankR<T>, T) {
    let k = alphas.len();
    let b = bidiagonal(alphas, &betas[..k - 1], k);
    let (p, sigma, q) = sorted_svd(b);
    let beta_k = betas[k - 1].abs();
    let residual = (0..r).fold(T::zero(), |m, i| m.max(beta_k * modulus(p[(k - 1, i)])));
    (assemble(us, vs, &p, &sigma, &q, r), residual)
}

/// Exact Ritz factors once a basis is exhausted. With `rectangular`, `B` is
/// `k × (k+1)` with the trailing coupling `betas[k−1]` in its last column.
fn ritz<T: Real>(
    us: &[Vec<Complex<T>>],
    vs: &[Vec<Complex<T>>],
    alphas: &[T],
    betas: &[T],
    r: usize,
    rectangular: bool,
) -> FactoredRankR<T> {
    let k = alphas.len();
    let b = if rectangular {
        bidiagonal(alphas, betas, k + 1)
    } else {
        bidiagonal(alphas, betas, k)
    };
    let (p, sigma, q) = sorted_svd(b);
    assemble(us, vs, &p, &sigma, &q, r)
}

/// Upper bidiagonal `k × cols` with `B[i,i] = α_i`, `B[i,i+1] = β_i`.
fn bidiagonal<T: Real>(alphas: &[T], betas: &[T], cols: usize) -> DMatrix<T> {
    let k = alphas.len();
    let mut b = DMatrix::zeros(k, cols);
    for (i, &a) in alphas.iter().enumerate() {
        b[(i, i)] = a;
    }
    for (i, &bt) in betas.iter().enumerate() {
        if i + 1 < cols {
            b[(i, i + 1)] = bt;
        }
    }
    b
}

/// SVD of the real bidiagonal, returned as complex coefficient matrices.
fn sorted_svd<T: Real>(b: DMatrix<T>) -> (DMatrix<Complex<T>>, Vec<T>, DMatrix<Complex<T>>) {
    let svd = jacobi_svd(&b.map(|x| Complex::new(x, T::zero())));
    (svd.u, svd.sigma, svd.v)
}

fn assemble<T: Real>(
    us: &[Vec<Complex<T>>],
    vs: &[Vec<Complex<T>>],
    p: &DMatrix<Complex<T>>,
    sigma: &[T],
    q: &DMatrix<Complex<T>>,
    r: usize,
) -> FactoredRankR<T> {
    let combine = |basis: &[Vec<Complex<T>>], coeffs: &DMatrix<Complex<T>>| {
        let rows = basis[0].len();
        let mut out = DMatrix::from_element(rows, r, czero::<T>());
        for j in 0..r {
            let mut col = out.column_mut(j);
            for (i, b) in basis.iter().enumerate().take(coeffs.nrows()) {
                let c = coeffs[(i, j)];
                if c == czero() {
                    continue;
                }
                for (o, x) in col.iter_mut().zip(b) {
                    *o += x * c;
                }
            }
        }
        out
    };
    FactoredRankR {
        u: combine(us, p),
        sigma: sigma[..r].iter().map(|s| s.max(T::zero())).collect(),
        v: combine(vs, q),
    }
}

fn axpy<T: Real>(a: T, x: &[Complex<T>], y: &mut [Complex<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi.scale(a);
    }
}

fn scaled<T: Real>(x: &[Complex<T>], a: T) -> Vec<Complex<T>> {
    x.iter().map(|c| c.scale(a)).collect()
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn reorthogonalize<T: Real>(p: &mut [Complex<T>], basis: &[Vec<Complex<T>>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, p);
            complex_axpy(-c, b, p);
        }
    }
}

fn random_unit_orthogonal<T: Real>(
    len: usize,
    basis: &[Vec<Complex<T>>],
    rng: &mut ChaCha8Rng,
) -> Vec<Complex<T>> {
    debug_assert!(basis.len() < len);
    loop {
        let mut v: Vec<Complex<T>> = (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        let before = norm2(&v);
        reorthogonalize(&mut v, basis);
        let after = norm2(&v);
        if after > before * T::lit(1e-3) {
            return scaled(&v, T::one() / after);
        }
    }
}
