//! Column kernels for tall, thin complex matrices. The recovery loop only
//! multiplies `n × k` blocks by small `k × l` ones, so plain dot and axpy
//! loops over contiguous columns beat a general matrix product here.

use nalgebra::DMatrix;
use super::svd::jacobi_svd;
use crate::scalar::{czero, Complex, Real};

fn col<T: Real>(m: &DMatrix<Complex<T>>, j: usize) -> &[Complex<T>] {
    let rows = m.nrows();
    &m.as_slice()[j * rows..(j + 1) * rows]
}

fn col_mut<T: Real>(m: &mut DMatrix<Complex<T>>, j: usize) -> &mut [Complex<T>] {
    let rows = m.nrows();
    &mut m.as_mut_slice()[j * rows..(j + 1) * rows]
}

/// `Σ conj(a_i) b_i`.
pub(crate) fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    #[cfg(target_arch = "x86_64")]
    if wide_simd() {
        // SAFETY: the CPU supports AVX2, checked at runtime.
        return unsafe { dot_avx2(a, b) };
    }
    dot_portable(a, b)
}

/// `y += alpha x`.
pub(crate) fn axpy<T: Real>(alpha: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    #[cfg(target_arch = "x86_64")]
    if wide_simd() {
        // SAFETY: the CPU supports AVX2, checked at runtime.
        return unsafe { axpy_avx2(alpha, x, y) };
    }
    axpy_portable(alpha, x, y)
}

#[cfg(target_arch = "x86_64")]
fn wide_simd() -> bool {
    std::is_x86_feature_detected!("avx2")
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dot_avx2<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    dot_portable(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn axpy_avx2<T: Real>(alpha: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    axpy_portable(alpha, x, y)
}

/// Independent partial sums let the reduction vectorize.
#[inline(always)]
fn dot_portable<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    const LANES: usize = 4;
    let mut re = [T::zero(); LANES];
    let mut im = [T::zero(); LANES];
    let split = a.len().min(b.len()) / LANES * LANES;
    for (xa, ya) in a[..split].chunks_exact(LANES).zip(b[..split].chunks_exact(LANES)) {
        for l in 0..LANES {
            let (x, y) = (xa[l], ya[l]);
            re[l] += x.re * y.re + x.im * y.im;
            im[l] += x.re * y.im - x.im * y.re;
        }
    }
    let (mut sre, mut sim) = (T::zero(), T::zero());
    for l in 0..LANES {
        sre += re[l];
        sim += im[l];
    }
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        sre += x.re * y.re + x.im * y.im;
        sim += x.re * y.im - x.im * y.re;
    }
    Complex::new(sre, sim)
}

#[inline(always)]
fn axpy_portable<T: Real>(alpha: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += alpha.re * xi.re - alpha.im * xi.im;
        yi.im += alpha.re * xi.im + alpha.im * xi.re;
    }
}

pub(crate) fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, c| acc + c.re * c.re + c.im * c.im).sqrt()
}

/// Rows per cache block; a block of every column of a thin operand fits in L2.
const BLOCK: usize = 256;

fn blocks(rows: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..rows).step_by(BLOCK).map(move |s| s..(s + BLOCK).min(rows))
}

/// `A* B`.
pub(crate) fn adjoint_mul<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    debug_assert_eq!(a.nrows(), b.nrows());
    #[cfg(target_arch = "x86_64")]
    if wide_simd() {
        // SAFETY: the CPU supports AVX2, checked at runtime.
        return unsafe { adjoint_mul_avx2(a, b) };
    }
    adjoint_mul_portable(a, b)
}

/// `Y += sign · A S` for tall `A` and small `S`.
pub(crate) fn add_mul<T: Real>(
    y: &mut DMatrix<Complex<T>>,
    a: &DMatrix<Complex<T>>,
    s: &DMatrix<Complex<T>>,
    sign: T,
) {
    debug_assert_eq!(a.ncols(), s.nrows());
    debug_assert_eq!(y.ncols(), s.ncols());
    let scaled = s.map(|c| c.scale(sign));
    #[cfg(target_arch = "x86_64")]
    if wide_simd() {
        // SAFETY: the CPU supports AVX2, checked at runtime.
        return unsafe { add_mul_avx2(y, a, &scaled) };
    }
    add_mul_portable(y, a, &scaled)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn adjoint_mul_avx2<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    adjoint_mul_portable(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn add_mul_avx2<T: Real>(y: &mut DMatrix<Complex<T>>, a: &DMatrix<Complex<T>>, s: &DMatrix<Complex<T>>) {
    add_mul_portable(y, a, s)
}

/// Row-blocked so every column block stays in cache, with two columns of
/// `A` per pass over a column of `B`.
#[inline(always)]
fn adjoint_mul_portable<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let mut out = DMatrix::from_element(a.ncols(), b.ncols(), czero::<T>());
    for rows in blocks(a.nrows()) {
        for j in 0..b.ncols() {
            let bj = &col(b, j)[rows.clone()];
            let mut i = 0;
            while i + 1 < a.ncols() {
                let (d0, d1) = dot_pair(&col(a, i)[rows.clone()], &col(a, i + 1)[rows.clone()], bj);
                out[(i, j)] += d0;
                out[(i + 1, j)] += d1;
                i += 2;
            }
            if i < a.ncols() {
                out[(i, j)] += dot_portable(&col(a, i)[rows.clone()], bj);
            }
        }
    }
    out
}

#[inline(always)]
fn add_mul_portable<T: Real>(y: &mut DMatrix<Complex<T>>, a: &DMatrix<Complex<T>>, s: &DMatrix<Complex<T>>) {
    for rows in blocks(a.nrows()) {
        for j in 0..s.ncols() {
            let yj = &mut col_mut(y, j)[rows.clone()];
            let mut k = 0;
            while k + 1 < a.ncols() {
                let (c0, c1) = (s[(k, j)], s[(k + 1, j)]);
                axpy_pair(c0, &col(a, k)[rows.clone()], c1, &col(a, k + 1)[rows.clone()], yj);
                k += 2;
            }
            if k < a.ncols() {
                axpy_portable(s[(k, j)], &col(a, k)[rows.clone()], yj);
            }
        }
    }
}

/// `(a0* b, a1* b)` in one pass over `b`.
#[inline(always)]
fn dot_pair<T: Real>(a0: &[Complex<T>], a1: &[Complex<T>], b: &[Complex<T>]) -> (Complex<T>, Complex<T>) {
    const LANES: usize = 2;
    let mut acc = [[T::zero(); LANES]; 4];
    let split = b.len() / LANES * LANES;
    for ((x0, x1), y) in a0[..split]
        .chunks_exact(LANES)
        .zip(a1[..split].chunks_exact(LANES))
        .zip(b[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            acc[0][l] += x0[l].re * y[l].re + x0[l].im * y[l].im;
            acc[1][l] += x0[l].re * y[l].im - x0[l].im * y[l].re;
            acc[2][l] += x1[l].re * y[l].re + x1[l].im * y[l].im;
            acc[3][l] += x1[l].re * y[l].im - x1[l].im * y[l].re;
        }
    }
    let mut sums = [T::zero(); 4];
    for (sum, lanes) in sums.iter_mut().zip(&acc) {
        *sum = lanes.iter().fold(T::zero(), |s, &v| s + v);
    }
    for i in split..b.len() {
        let (x0, x1, y) = (a0[i], a1[i], b[i]);
        sums[0] += x0.re * y.re + x0.im * y.im;
        sums[1] += x0.re * y.im - x0.im * y.re;
        sums[2] += x1.re * y.re + x1.im * y.im;
        sums[3] += x1.re * y.im - x1.im * y.re;
    }
    (Complex::new(sums[0], sums[1]), Complex::new(sums[2], sums[3]))
}

/// `y += c0 x0 + c1 x1` in one pass over `y`.
#[inline(always)]
fn axpy_pair<T: Real>(c0: Complex<T>, x0: &[Complex<T>], c1: Complex<T>, x1: &[Complex<T>], y: &mut [Complex<T>]) {
    for ((yi, a), b) in y.iter_mut().zip(x0).zip(x1) {
        yi.re += c0.re * a.re - c0.im * a.im + c1.re * b.re - c1.im * b.im;
        yi.im += c0.re * a.im + c0.im * a.re + c1.re * b.im + c1.im * b.re;
    }
}

/// `A S` for tall `A` and small `S`.
pub(crate) fn mul<T: Real>(a: &DMatrix<Complex<T>>, s: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let mut out = DMatrix::from_element(a.nrows(), s.ncols(), czero());
    add_mul(&mut out, a, s, T::one());
    out
}

/// `[A | B] S` without forming `[A | B]`.
pub(crate) fn mul_pair<T: Real>(
    a: &DMatrix<Complex<T>>,
    b: &DMatrix<Complex<T>>,
    s: &DMatrix<Complex<T>>,
) -> DMatrix<Complex<T>> {
    let k = a.ncols();
    let mut out = mul(a, &s.rows(0, k).into_owned());
    add_mul(&mut out, b, &s.rows(k, b.ncols()).into_owned(), T::one());
    out
}

/// `Y −= B (B* Y)`.
fn project_out<T: Real>(basis: &DMatrix<Complex<T>>, y: &mut DMatrix<Complex<T>>) {
    if basis.ncols() == 0 {
        return;
    }
    let coeffs = adjoint_mul(basis, y);
    add_mul(y, basis, &coeffs, -T::one());
}

/// `W* W`, filling the lower triangle by symmetry.
fn gram<T: Real>(w: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let k = w.ncols();
    let mut g = DMatrix::from_element(k, k, czero::<T>());
    for rows in blocks(w.nrows()) {
        for j in 0..k {
            let wj = &col(w, j)[rows.clone()];
            for i in 0..=j {
                g[(i, j)] += dot(&col(w, i)[rows.clone()], wj);
            }
        }
    }
    for j in 0..k {
        g[(j, j)].im = T::zero();
        for i in 0..j {
            g[(j, i)] = g[(i, j)].conj();
        }
    }
    g
}

/// Orthonormalizes the columns of `w` through the eigendecomposition of its
/// Gram matrix `G`, dropping directions with singular value at most `floor`.
/// Returns `M` with `W M` orthonormal and the squared condition number of
/// the kept part.
fn svqb_map<T: Real>(g: &DMatrix<Complex<T>>, floor: T) -> (DMatrix<Complex<T>>, T) {
    let eig = jacobi_svd(g);
    let keep = eig.sigma.iter().take_while(|&&l| l > floor * floor && l > T::zero()).count();
    let mut map = DMatrix::from_element(g.ncols(), keep, czero::<T>());
    for j in 0..keep {
        let inv = T::one() / eig.sigma[j].sqrt();
        for i in 0..g.ncols() {
            map[(i, j)] = eig.u[(i, j)].scale(inv);
        }
    }
    let cond = if keep == 0 { T::one() } else { eig.sigma[0] / eig.sigma[keep - 1] };
    (map, cond)
}

/// Orthonormal basis `Q = span · map` of the part of some `y` orthogonal to
/// a basis `B`, with `(I − B B*) y = Q r`. `Q` is left unformed so callers
/// that only need `Q S` can compute `span · (map S)`.
pub(crate) struct Complement<T: Real> {
    pub span: DMatrix<Complex<T>>,
    pub map: DMatrix<Complex<T>>,
    pub r: DMatrix<Complex<T>>,
}

impl<T: Real> Complement<T> {
    pub fn width(&self) -> usize {
        self.map.ncols()
    }

    #[cfg(test)]
    pub fn q(&self) -> DMatrix<Complex<T>> {
        mul(&self.span, &self.map)
    }
}

/// QR of `y` restricted to the orthogonal complement of `basis`. `coeffs`,
/// when given, must equal `B* y`.
///
/// Directions of the projected `y` with singular value at most about
/// `eps · ‖y‖_F` are dropped, so `Q` may have fewer columns than `y`. This
/// keeps `Q` orthonormal at fixed points, where the projection is zero.
pub(crate) fn complement_qr<T: Real>(
    basis: &DMatrix<Complex<T>>,
    y: DMatrix<Complex<T>>,
    coeffs: Option<&DMatrix<Complex<T>>>,
) -> Complement<T> {
    let before: Vec<T> = (0..y.ncols()).map(|j| norm(col(&y, j))).collect();
    let scale = before.iter().fold(T::zero(), |acc, &b| acc + b * b).sqrt();
    let floor = T::epsilon() * T::from_count(y.nrows().max(1)).sqrt() * T::lit(16.0) * scale;
    let mut w = y;
    if basis.ncols() > 0 {
        let first = match coeffs {
            Some(c) => c.clone(),
            None => adjoint_mul(basis, &w),
        };
        add_mul(&mut w, basis, &first, -T::one());
        // Reproject when any column lost more than half its norm.
        let cancelled = (0..w.ncols()).any(|j| norm(col(&w, j)) <= T::lit(0.5) * before[j]);
        if cancelled {
            project_out(basis, &mut w);
        }
    }
    let g = gram(&w);
    let (map, cond) = svqb_map(&g, floor);
    if cond <= T::lit(1e4) {
        let r = map.adjoint() * g;
        return Complement { span: w, map, r };
    }
    // The Gram matrix cannot resolve an ill-conditioned `w`.
    let (q, r) = gram_schmidt_complement(basis, &w, floor);
    let map = DMatrix::identity(q.ncols(), q.ncols());
    Complement { span: q, map, r }
}

/// Column-by-column Gram–Schmidt with reorthogonalization against `basis`
/// and the columns accepted so far. Columns whose remainder is at most
/// `floor` add no new direction.
fn gram_schmidt_complement<T: Real>(
    basis: &DMatrix<Complex<T>>,
    w: &DMatrix<Complex<T>>,
    floor: T,
) -> (DMatrix<Complex<T>>, DMatrix<Complex<T>>) {
    let mut qs: Vec<Vec<Complex<T>>> = Vec::new();
    let mut rs: Vec<Vec<Complex<T>>> = Vec::new();
    for j in 0..w.ncols() {
        let mut x = col(w, j).to_vec();
        let mut coeffs = vec![czero::<T>(); qs.len()];
        let mut before = norm(&x);
        let mut after = before;
        for _ in 0..3 {
            for b in 0..basis.ncols() {
                let c = dot(col(basis, b), &x);
                axpy(-c, col(basis, b), &mut x);
            }
            for (q, acc) in qs.iter().zip(coeffs.iter_mut()) {
                let c = dot(q, &x);
                axpy(-c, q, &mut x);
                *acc += c;
            }
            after = norm(&x);
            if after > T::lit(0.5) * before {
                break;
            }
            before = after;
        }
        if after > floor {
            let inv = T::one() / after;
            x.iter_mut().for_each(|c| *c = c.scale(inv));
            qs.push(x);
            coeffs.push(Complex::new(after, T::zero()));
        }
        rs.push(coeffs);
    }
    let p = qs.len();
    let q = DMatrix::from_fn(w.nrows(), p, |i, k| qs[k][i]);
    let r = DMatrix::from_fn(p, w.ncols(), |i, j| rs[j].get(i).copied().unwrap_or_else(czero));
    (q, r)
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

    fn orthonormal(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex<f64>> {
        lcg_matrix(rows, cols, seed).qr().q()
    }

    fn check(basis: &DMatrix<Complex<f64>>, y: &DMatrix<Complex<f64>>) {
        let c = complement_qr(basis, y.clone(), None);
        let (q, r) = (c.q(), c.r);
        let py = y - basis * (basis.adjoint() * y);
        assert!((&q * &r - &py).norm() <= 1e-12 * py.norm().max(1.0));
        let eye = DMatrix::<Complex<f64>>::identity(q.ncols(), q.ncols());
        assert!((q.adjoint() * &q - eye).norm() < 1e-12);
        assert!((basis.adjoint() * &q).norm() < 1e-12);
    }

    #[test]
    fn products_match_nalgebra() {
        let a = lcg_matrix(50, 4, 1);
        let b = lcg_matrix(50, 3, 2);
        let s = lcg_matrix(4, 3, 3);
        let t = lcg_matrix(3, 3, 4);
        assert!((adjoint_mul(&a, &b) - a.adjoint() * &b).norm() < 1e-12);
        assert!((mul(&a, &s) - &a * &s).norm() < 1e-12);
        let st = DMatrix::from_fn(7, 3, |i, j| if i < 4 { s[(i, j)] } else { t[(i - 4, j)] });
        assert!((mul_pair(&a, &b, &st) - (&a * &s + &b * &t)).norm() < 1e-12);
    }

    #[test]
    fn complement_of_generic_block() {
        let basis = orthonormal(40, 5, 5);
        let y = lcg_matrix(40, 5, 6);
        check(&basis, &y);
        let c = complement_qr(&basis, y.clone(), Some(&(basis.adjoint() * &y)));
        let (q, r) = (c.q(), c.r);
        let py = &y - &basis * (basis.adjoint() * &y);
        assert!((q * r - py).norm() < 1e-12);
    }

    #[test]
    fn complement_of_ill_conditioned_block() {
        let basis = orthonormal(60, 4, 12);
        let mut y = lcg_matrix(60, 4, 13);
        for (j, scale) in [1.0, 1e-4, 1e-8, 1e-11].iter().enumerate() {
            let col = y.column(j).into_owned() * Complex::new(*scale, 0.0) + y.column(0) * Complex::new(1.0, 0.0);
            y.set_column(j, &col);
        }
        check(&basis, &y);
    }

    #[test]
    fn complement_of_dependent_and_zero_blocks() {
        let basis = orthonormal(30, 3, 7);
        let a = lcg_matrix(30, 1, 8);
        let y = DMatrix::from_fn(30, 3, |i, j| a[(i, 0)] * Complex::new(j as f64 + 1.0, 0.0));
        check(&basis, &y);
        assert_eq!(complement_qr(&basis, y.clone(), None).width(), 1);
        check(&basis, &DMatrix::from_element(30, 3, Complex::new(0.0, 0.0)));
        // Columns inside the span of the basis project to zero.
        check(&basis, &(&basis * lcg_matrix(3, 3, 9)));
    }

    #[test]
    fn complement_in_short_space() {
        let basis = orthonormal(5, 3, 10);
        let y = lcg_matrix(5, 3, 11);
        let c = complement_qr(&basis, y.clone(), None);
        let (q, r) = (c.q(), c.r);
        assert_eq!((q.ncols(), r.nrows()), (2, 2));
        check(&basis, &y);
    }
}
