//! The Hankel lifting `H`, its left inverse `H†`, and FFT-based applications
//! of `H(x)`, `H(x)*` and `H†` that never form the `n1 × n2` matrix.
//!
//! Indexing is 0-based: entry `(a, b)` of `H(x)` is `x[a + b]`.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lowrank::FactoredRankR;
use crate::scalar::{czero, Complex, Real};
use crate::signal::ComplexSignal;

/// Largest signal length the dense oracles accept (`O(n²)` storage).
pub const DENSE_ORACLE_MAX_LEN: usize = 4096;

/// Dimensions of a Hankel lift and the antidiagonal multiplicities `rho`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HankelShape {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    /// `rho[t]` = number of cells on antidiagonal `t`.
    pub rho: Vec<usize>,
}

impl HankelShape {
    /// General `n1 × n2` shape; `n = n1 + n2 − 1`.
    pub fn from_dims<T: Real>(n1: usize, n2: usize) -> Result<Self, T> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidSize(format!("hankel dims {n1}x{n2}")));
        }
        let n = n1 + n2 - 1;
        let rho = (0..n)
            .map(|t| (t + 1).min(n1).min(n2).min(n - t))
            .collect();
        Ok(Self { n, n1, n2, rho })
    }

    /// `min(n1, n2)`, the largest admissible rank.
    pub fn max_rank(&self) -> usize {
        self.n1.min(self.n2)
    }

    /// Shape factor `c_s = max(n/n1, n/n2)`.
    pub fn c_s(&self) -> f64 {
        let n = self.n as f64;
        (n / self.n1 as f64).max(n / self.n2 as f64)
    }
}

/// Nearly square shape for a length-`n` signal: `n1 = n2 = (n+1)/2` for odd
/// `n`, `n1 = n/2`, `n2 = n/2 + 1` for even `n`.
pub fn hankel_shape<T: Real>(n: usize) -> Result<HankelShape, T> {
    if n == 0 {
        return Err(Error::InvalidSize("signal length must be at least 1".into()));
    }
    let n1 = if n % 2 == 1 { n.div_ceil(2) } else { n / 2 };
    HankelShape::from_dims(n1, n + 1 - n1)
}

/// Materializes `H(x)`. Test oracle only; limited to `n ≤ 4096`.
pub fn hankel_dense<T: Real>(x: &ComplexSignal<T>) -> Result<DMatrix<Complex<T>>, T> {
    gate_dense::<T>(x.len())?;
    let shape = hankel_shape::<T>(x.len())?;
    Ok(DMatrix::from_fn(shape.n1, shape.n2, |a, b| x[a + b]))
}

/// Antidiagonal averaging `[H†(M)]_t = (1/rho_t) Σ_{a+b=t} M[a,b]`.
pub fn hankel_pinv_dense<T: Real>(m: &DMatrix<Complex<T>>) -> Result<ComplexSignal<T>, T> {
    let (n1, n2) = m.shape();
    if n1 == 0 || n2 == 0 || n1.abs_diff(n2) > 1 {
        return Err(Error::shape("n1 x n2 with |n1 - n2| <= 1", format!("{n1}x{n2}")));
    }
    let shape = HankelShape::from_dims::<T>(n1, n2)?;
    gate_dense::<T>(shape.n)?;
    let mut out = vec![czero::<T>(); shape.n];
    for b in 0..n2 {
        for a in 0..n1 {
            out[a + b] += m[(a, b)];
        }
    }
    for (v, &rho) in out.iter_mut().zip(&shape.rho) {
        *v = v.unscale(T::from_count(rho));
    }
    Ok(ComplexSignal::from_vec_unchecked(out))
}

fn gate_dense<T: Real>(n: usize) -> Result<(), T> {
    if n > DENSE_ORACLE_MAX_LEN {
        return Err(Error::InvalidSize(format!(
            "dense oracle limited to n <= {DENSE_ORACLE_MAX_LEN}, got {n}"
        )));
    }
    Ok(())
}

/// Cached FFT plans for one signal length.
///
/// The transform length is the next power of two `≥ n`; every correlation and
/// convolution the algorithms need has linear length at most `n`, so no
/// wrap-around reaches the extracted entries.
#[derive(Clone)]
pub struct HankelPlan<T: Real> {
    shape: HankelShape,
    fft_len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for HankelPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HankelPlan")
            .field("shape", &(self.shape.n1, self.shape.n2))
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl<T: Real> HankelPlan<T> {
    pub fn new(n: usize) -> Result<Self, T> {
        let shape = hankel_shape(n)?;
        let fft_len = n.next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
            shape,
            fft_len,
        })
    }

    pub fn shape(&self) -> &HankelShape {
        &self.shape
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    fn scratch(&self) -> Vec<Complex<T>> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![czero(); len]
    }

    /// Zero-padded copy of `data` in `buf`.
    fn load(&self, buf: &mut Vec<Complex<T>>, data: impl IntoIterator<Item = Complex<T>>) {
        buf.clear();
        buf.extend(data);
        debug_assert!(buf.len() <= self.fft_len);
        buf.resize(self.fft_len, czero());
    }

    fn fft(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse transform without the `1/N` factor; callers fold it in.
    fn ifft_unscaled(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    fn inv_len(&self) -> T {
        T::one() / T::from_count(self.fft_len)
    }

    /// Binds a signal: precomputes its spectrum so repeated products with
    /// `H(x)` and `H(x)*` cost one forward and one inverse FFT each.
    pub fn operator(&self, x: &ComplexSignal<T>) -> Result<HankelOperator<'_, T>, T> {
        if x.len() != self.shape.n {
            return Err(Error::shape(format!("signal of length {}", self.shape.n), x.len()));
        }
        let mut scratch = self.scratch();
        let mut spectrum = Vec::with_capacity(self.fft_len);
        self.load(&mut spectrum, x.iter().copied());
        self.fft(&mut spectrum, &mut scratch);
        // The inverse normalization rides on the spectrum.
        let inv = self.inv_len();
        spectrum.iter_mut().for_each(|c| *c = c.scale(inv));
        Ok(HankelOperator {
            plan: self,
            spectrum,
            work: RefCell::new(Workspace {
                buf: Vec::with_capacity(self.fft_len),
                scratch,
            }),
        })
    }

    /// `H†(U Σ V*)` as `Σ_j σ_j conv(U[:,j], conj V[:,j]) / rho`.
    ///
    /// The sum runs in the frequency domain, so the cost is `2r` forward
    /// transforms and one inverse transform.
    pub fn pinv_factored(&self, l: &FactoredRankR<T>) -> Result<ComplexSignal<T>, T> {
        self.pinv_impl(l, false).map(|(x, _)| x)
    }

    /// [`Self::pinv_factored`] that also returns the factor spectra, so the
    /// next products with `U` and `V` skip their forward transforms.
    pub(crate) fn pinv_with_spectra(
        &self,
        l: &FactoredRankR<T>,
    ) -> Result<(ComplexSignal<T>, FactorSpectra<T>), T> {
        self.pinv_impl(l, true)
            .map(|(x, spectra)| (x, spectra.expect("spectra requested")))
    }

    fn pinv_impl(
        &self,
        l: &FactoredRankR<T>,
        keep: bool,
    ) -> Result<(ComplexSignal<T>, Option<FactorSpectra<T>>), T> {
        let (n1, n2) = (self.shape.n1, self.shape.n2);
        if l.u.nrows() != n1 || l.v.nrows() != n2 {
            return Err(Error::shape(
                format!("factors with {n1} and {n2} rows"),
                format!("{} and {}", l.u.nrows(), l.v.nrows()),
            ));
        }
        let mut acc = vec![czero::<T>(); self.fft_len];
        let mut scratch = self.scratch();
        let mut spectra = keep.then(|| FactorSpectra {
            u: Vec::with_capacity(l.rank()),
            v_conj: Vec::with_capacity(l.rank()),
        });
        let (mut a, mut b) = (Vec::with_capacity(self.fft_len), Vec::with_capacity(self.fft_len));
        let inv = self.inv_len();
        for j in 0..l.rank() {
            let sigma = l.sigma[j];
            if sigma == T::zero() && !keep {
                continue;
            }
            self.load(&mut a, l.u.column(j).iter().copied());
            self.load(&mut b, l.v.column(j).iter().map(|c| c.conj()));
            self.fft(&mut a, &mut scratch);
            self.fft(&mut b, &mut scratch);
            if sigma != T::zero() {
                let weight = sigma * inv;
                for ((s, x), y) in acc.iter_mut().zip(&a).zip(&b) {
                    *s += (x * y).scale(weight);
                }
            }
            if let Some(sp) = spectra.as_mut() {
                sp.u.push(std::mem::replace(&mut a, Vec::with_capacity(self.fft_len)));
                sp.v_conj.push(std::mem::replace(&mut b, Vec::with_capacity(self.fft_len)));
            }
        }
        self.ifft_unscaled(&mut acc, &mut scratch);
        acc.truncate(self.shape.n);
        for (v, &rho) in acc.iter_mut().zip(&self.shape.rho) {
            *v = v.unscale(T::from_count(rho));
        }
        Ok((ComplexSignal::from_vec_unchecked(acc), spectra))
    }
}

/// Padded spectra of the columns of a factored matrix: `DFT(U[:,j])` and
/// `DFT(conj V[:,j])`.
pub(crate) struct FactorSpectra<T: Real> {
    u: Vec<Vec<Complex<T>>>,
    v_conj: Vec<Vec<Complex<T>>>,
}

/// `H(x)` bound to a plan, applied implicitly.
pub struct HankelOperator<'p, T: Real> {
    plan: &'p HankelPlan<T>,
    /// Spectrum of `x`, already scaled by `1/N`.
    spectrum: Vec<Complex<T>>,
    work: RefCell<Workspace<T>>,
}

struct Workspace<T: Real> {
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> HankelOperator<'_, T> {
    pub fn shape(&self) -> &HankelShape {
        &self.plan.shape
    }

    /// Circular correlation `out_i = Σ_j x[i+j] w[j]`, with `w` and `out`
    /// conjugated when `conj` is set.
    fn correlate(&self, w: &[Complex<T>], conj: bool, out: &mut [Complex<T>]) {
        let f = |c: Complex<T>| if conj { c.conj() } else { c };
        let len = self.plan.fft_len;
        let mut work = self.work.borrow_mut();
        let Workspace { buf, scratch } = &mut *work;
        buf.clear();
        buf.resize(len, czero());
        // buf[(−j) mod N] = w[j]
        buf[0] = f(w[0]);
        for (j, &wj) in w.iter().enumerate().skip(1) {
            buf[len - j] = f(wj);
        }
        self.plan.fft(buf, scratch);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.plan.ifft_unscaled(buf, scratch);
        for (o, &b) in out.iter_mut().zip(buf.iter()) {
            *o = f(b);
        }
    }

    /// `H(x) v` for `v` of length `n2`.
    pub fn apply(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>, T> {
        let HankelShape { n1, n2, .. } = self.plan.shape;
        if v.len() != n2 {
            return Err(Error::shape(format!("vector of length {n2}"), v.len()));
        }
        let mut out = vec![czero(); n1];
        self.correlate(v, false, &mut out);
        Ok(out)
    }

    /// `H(x)* u` for `u` of length `n1`.
    pub fn apply_adjoint(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>, T> {
        let HankelShape { n1, n2, .. } = self.plan.shape;
        if u.len() != n1 {
            return Err(Error::shape(format!("vector of length {n1}"), u.len()));
        }
        let mut out = vec![czero(); n2];
        self.correlate(u, true, &mut out);
        Ok(out)
    }

    /// `H(x) V` column by column.
    pub fn apply_matrix(&self, v: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>, T> {
        let HankelShape { n1, n2, .. } = self.plan.shape;
        if v.nrows() != n2 {
            return Err(Error::shape(format!("matrix with {n2} rows"), v.nrows()));
        }
        Ok(self.apply_columns(v, n1, false))
    }

    /// `H(x)* U` column by column.
    pub fn apply_adjoint_matrix(
        &self,
        u: &DMatrix<Complex<T>>,
    ) -> Result<DMatrix<Complex<T>>, T> {
        let HankelShape { n1, n2, .. } = self.plan.shape;
        if u.nrows() != n1 {
            return Err(Error::shape(format!("matrix with {n1} rows"), u.nrows()));
        }
        Ok(self.apply_columns(u, n2, true))
    }

    /// `H(x) V` and `H(x)* U` for the factors whose spectra are given.
    ///
    /// The reversed column that a correlation transforms has spectrum
    /// `conj(DFT(conj v))` for `v`, and `conj(DFT(u))` for `conj u`, so no
    /// forward transform is needed.
    pub(crate) fn apply_factors(&self, spectra: &FactorSpectra<T>) -> (DMatrix<Complex<T>>, DMatrix<Complex<T>>) {
        let HankelShape { n1, n2, .. } = self.plan.shape;
        (
            self.apply_spectra(&spectra.v_conj, n1, false),
            self.apply_spectra(&spectra.u, n2, true),
        )
    }

    fn apply_spectra(&self, spectra: &[Vec<Complex<T>>], out_rows: usize, conj: bool) -> DMatrix<Complex<T>> {
        let mut out = DMatrix::from_element(out_rows, spectra.len(), czero());
        let mut work = self.work.borrow_mut();
        let Workspace { buf, scratch } = &mut *work;
        for (j, spectrum) in spectra.iter().enumerate() {
            buf.clear();
            buf.extend(spectrum.iter().zip(&self.spectrum).map(|(c, s)| c.conj() * s));
            self.plan.ifft_unscaled(buf, scratch);
            let column = &mut out.as_mut_slice()[j * out_rows..(j + 1) * out_rows];
            for (o, &b) in column.iter_mut().zip(buf.iter()) {
                *o = if conj { b.conj() } else { b };
            }
        }
        out
    }

    fn apply_columns(&self, m: &DMatrix<Complex<T>>, out_rows: usize, conj: bool) -> DMatrix<Complex<T>> {
        let mut out = DMatrix::from_element(out_rows, m.ncols(), czero());
        let rows = m.nrows();
        for j in 0..m.ncols() {
            let input = &m.as_slice()[j * rows..(j + 1) * rows];
            let output = &mut out.as_mut_slice()[j * out_rows..(j + 1) * out_rows];
            self.correlate(input, conj, output);
        }
        out
    }
}

/// One-shot `H(x) v`.
pub fn hankel_matvec<T: Real>(x: &ComplexSignal<T>, v: &[Complex<T>]) -> Result<Vec<Complex<T>>, T> {
    let plan = HankelPlan::new(x.len())?;
    plan.operator(x)?.apply(v)
}

/// One-shot `H(x)* u`.
pub fn hankel_adjoint_matvec<T: Real>(
    x: &ComplexSignal<T>,
    u: &[Complex<T>],
) -> Result<Vec<Complex<T>>, T> {
    let plan = HankelPlan::new(x.len())?;
    plan.operator(x)?.apply_adjoint(u)
}

/// One-shot `H†(L)` for a factored matrix.
pub fn hankel_pinv_factored<T: Real>(l: &FactoredRankR<T>) -> Result<ComplexSignal<T>, T> {
    let n = l.u.nrows() + l.v.nrows() - 1;
    let plan = HankelPlan::new(n)?;
    plan.pinv_factored(l)
}
