//! One-sided (Hestenes) Jacobi SVD for the small dense matrices of the
//! recovery loop: the core of the tangent-space update and the Lanczos
//! bidiagonal. Jacobi keeps singular values relatively accurate, which the
//! tiny trailing values of nearly exact-rank inputs need.

use nalgebra::DMatrix;

use crate::scalar::{czero, modulus, Complex, Real};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(sigma) V*`, singular values non-increasing.
/// `U` and `V` always have orthonormal columns, including those paired with
/// zero singular values.
#[derive(Clone, Debug)]
pub struct DenseSvd<T: Real> {
    pub u: DMatrix<Complex<T>>,
    pub sigma: Vec<T>,
    pub v: DMatrix<Complex<T>>,
}

pub fn jacobi_svd<T: Real>(a: &DMatrix<Complex<T>>) -> DenseSvd<T> {
    if a.nrows() < a.ncols() {
        let t = jacobi_svd_tall(&a.adjoint());
        return DenseSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    jacobi_svd_tall(a)
}

fn jacobi_svd_tall<T: Real>(a: &DMatrix<Complex<T>>) -> DenseSvd<T> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<Complex<T>>::identity(n, n);
    let tol = T::epsilon() * T::from_count(m.max(1));

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = w.column(p);
                    let cq = w.column(q);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = czero::<T>();
                    for (x, y) in cp.iter().zip(cq.iter()) {
                        alpha += x.re * x.re + x.im * x.im;
                        beta += y.re * y.re + y.im * y.im;
                        gamma += x.conj() * y;
                    }
                    (alpha, beta, gamma)
                };
                let g = modulus(gamma);
                if g == T::zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g); // e^{iφ}
                let tau = (beta - alpha) / (T::lit(2.0) * g);
                let t = tau.signum_or_one() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..n)
        .map(|j| {
            w.column(j)
                .iter()
                .fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im)
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let scale = norms.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let floor = scale * T::epsilon() * T::from_count(n.max(1));
    let mut u = DMatrix::from_element(m, n, czero::<T>());
    let mut vs = DMatrix::from_element(n, n, czero::<T>());
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        vs.set_column(k, &v.column(j));
        let s = norms[j];
        if s > floor && s > T::zero() {
            let inv = T::one() / s;
            for i in 0..m {
                u[(i, k)] = w[(i, j)].scale(inv);
            }
            sigma.push(s);
        } else {
            // Treat as exactly zero; the left vector is completed below.
            missing.push(k);
            sigma.push(T::zero());
        }
    }
    complete_orthonormal(&mut u, &missing);
    DenseSvd { u, sigma, v: vs }
}

/// Column update `[w_p, w_q] ← [c w_p − s e^{−iφ} w_q, s w_p + c e^{−iφ} w_q]`.
fn rotate<T: Real>(w: &mut DMatrix<Complex<T>>, p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    let conj_phase = phase.conj();
    for i in 0..w.nrows() {
        let x = w[(i, p)];
        let y = w[(i, q)] * conj_phase;
        w[(i, p)] = x.scale(c) - y.scale(s);
        w[(i, q)] = x.scale(s) + y.scale(c);
    }
}

/// Fills the listed columns with unit vectors orthogonal to every other
/// column. Each one is the coordinate vector with the largest component
/// outside the span filled so far.
fn complete_orthonormal<T: Real>(u: &mut DMatrix<Complex<T>>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|k| !missing.contains(k)).collect();
    let project_out = |u: &DMatrix<Complex<T>>, filled: &[usize], e: &mut [Complex<T>]| {
        for _ in 0..2 {
            for &f in filled {
                let coeff = (0..m).fold(czero::<T>(), |acc, i| acc + u[(i, f)].conj() * e[i]);
                for (i, ei) in e.iter_mut().enumerate() {
                    *ei -= u[(i, f)] * coeff;
                }
            }
        }
    };
    for &k in missing {
        let mut best: Option<(T, Vec<Complex<T>>)> = None;
        for candidate in 0..m {
            let mut e = vec![czero::<T>(); m];
            e[candidate] = Complex::new(T::one(), T::zero());
            project_out(u, &filled, &mut e);
            let norm = e.iter().fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im).sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, e));
            }
        }
        let (norm, mut e) = best.expect("matrix has at least one row");
        assert!(norm > T::zero(), "cannot complete an orthonormal basis");
        // One more pass keeps the new column orthogonal to working precision.
        for ei in e.iter_mut() {
            *ei = ei.unscale(norm);
        }
        project_out(u, &filled, &mut e);
        let norm = e.iter().fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im).sqrt();
        for (i, ei) in e.iter().enumerate() {
            u[(i, k)] = ei.unscale(norm);
        }
        filled.push(k);
    }
}

trait SignumOrOne {
    fn signum_or_one(self) -> Self;
}

impl<T: Real> SignumOrOne for T {
    fn signum_or_one(self) -> Self {
        if self < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex<f64>> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DMatrix::from_fn(rows, cols, |_, _| Complex::new(next(), next()))
    }

    fn check(a: &DMatrix<Complex<f64>>) {
        let s = jacobi_svd(a);
        let k = a.nrows().min(a.ncols());
        assert_eq!(s.sigma.len(), k);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let d = DMatrix::from_fn(k, k, |i, j| if i == j { Complex::new(s.sigma[i], 0.0) } else { Complex::new(0.0, 0.0) });
        let rec = &s.u * d * s.v.adjoint();
        assert!((rec - a).norm() <= 1e-13 * a.norm().max(1.0));
        let eye = DMatrix::<Complex<f64>>::identity(k, k);
        assert!((s.u.adjoint() * &s.u - &eye).norm() < 1e-13);
        assert!((s.v.adjoint() * &s.v - &eye).norm() < 1e-13);
    }

    #[test]
    fn reconstructs_random_shapes() {
        for (i, &(r, c)) in [(1, 1), (4, 4), (7, 3), (3, 7), (20, 20), (16, 9)].iter().enumerate() {
            check(&lcg_matrix(r, c, i as u64));
        }
    }

    #[test]
    fn bidiagonal_with_tiny_trailing_entry() {
        let a = [41.07414522069272, 123.91795091582385, 46.48923858250448, 58.11332141302295, 45.421810285951544, 2.668018853877309e-10];
        let b = [213.2418226146759, 200.32815505906876, 167.005424852722, 195.73792663775956, 139.47328969463769];
        let m = DMatrix::from_fn(6, 6, |i, j| {
            let v = if i == j { a[i] } else if j == i + 1 { b[i] } else { 0.0 };
            Complex::new(v, 0.0)
        });
        check(&m);
    }

    #[test]
    fn zero_and_rank_deficient() {
        check(&DMatrix::from_element(5, 4, Complex::new(0.0, 0.0)));
        let a = lcg_matrix(6, 2, 3);
        let b = lcg_matrix(5, 2, 4);
        let low = &a * b.adjoint();
        check(&low);
        let s = jacobi_svd(&low);
        assert!(s.sigma[2] < 1e-14 * s.sigma[0]);
    }

    #[test]
    fn completes_basis_for_tall_low_rank() {
        // A dense rank-one column in many rows: every coordinate vector has
        // only a small component left after the first columns are filled.
        let m = 40;
        let col = lcg_matrix(m, 1, 9);
        let a = DMatrix::from_fn(m, 12, |i, j| col[(i, 0)] * Complex::new(j as f64 + 1.0, 0.0));
        check(&a);
        check(&DMatrix::from_element(m, m, Complex::new(1.0, 0.0)));
    }
}
