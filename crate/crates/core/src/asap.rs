//! The accelerated recovery loop: hard thresholding, one-step alternating
//! projection initialization, parameter estimation and stopping logic.
//!
//! The loop is shared with the full-SVD baseline in [`crate::baselines`]; only
//! the rank-`r` projection step differs.

use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::hankel::{hankel_shape, FactorSpectra, HankelPlan, HankelShape};
use crate::lowrank::{
    accelerated_step, incoherence, truncated_svd_with, FactoredRankR, LanczosOptions,
};
use crate::scalar::{modulus, Real};
use crate::signal::ComplexSignal;
use crate::sparse::SparseEstimate;

/// Iteration cap used by [`default_params`].
pub const DEFAULT_MAX_ITER: usize = 100;

/// The knobs of the recovery loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryParams<T: Real> {
    /// Model order.
    pub r: usize,
    /// Stop once the relative residual drops below this.
    pub epsilon: T,
    /// Thresholding parameter of the main loop.
    pub beta: T,
    /// Thresholding parameter of the initialization.
    pub beta_init: T,
    /// Geometric decay of the threshold, in `(0, 1)`.
    pub gamma: T,
    pub max_iter: usize,
}

impl<T: Real> RecoveryParams<T> {
    pub fn validate(&self) -> Result<(), T> {
        let bad = |what: &str| Err(Error::InvalidInput(what.to_string()));
        if self.r == 0 {
            return bad("r must be at least 1");
        }
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return bad("epsilon must be positive and finite");
        }
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return bad("beta must be positive and finite");
        }
        if !(self.beta_init > T::zero()) || !self.beta_init.is_finite() {
            return bad("beta_init must be positive and finite");
        }
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        Ok(())
    }
}

/// Estimates derived from one Cadzow step on the observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamEstimates<T: Real> {
    /// Incoherence of the denoised rank-`r` Hankel factors.
    pub mu_hat: T,
    /// `σ₁` of the lifted denoised signal, a proxy for `σ₁(H(x))`.
    pub sigma1x_hat: T,
    /// `σ₁(H(z))`.
    pub sigma1z: T,
}

/// Wall-clock split of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecoveryTiming {
    pub init: Duration,
    pub iterations: Vec<Duration>,
}

impl RecoveryTiming {
    pub fn total(&self) -> Duration {
        self.init + self.iterations.iter().sum::<Duration>()
    }

    /// Mean over iterations, or zero when none ran.
    pub fn mean_iteration(&self) -> Duration {
        match self.iterations.len() {
            0 => Duration::ZERO,
            k => self.iterations.iter().sum::<Duration>() / k as u32,
        }
    }
}

/// Output of a recovery run together with its per-iteration traces.
///
/// Index `k` of `errors`, `sigma1_trace` and `support_sizes` refers to the
/// iterate `(x_k, s_k, L_k)`, with `k = 0` the initialization. `zetas[k]` is
/// the threshold that produced `s_{k+1}`.
#[derive(Clone, Debug)]
pub struct RecoveryResult<T: Real> {
    pub x_hat: ComplexSignal<T>,
    pub s_hat: SparseEstimate<T>,
    pub errors: Vec<T>,
    pub sigma1_trace: Vec<T>,
    pub zetas: Vec<T>,
    pub zeta0: T,
    pub support_sizes: Vec<usize>,
    /// Supports of every `s_k`, when requested through [`RunOptions`].
    pub supports: Option<Vec<Vec<usize>>>,
    pub iterations: usize,
    pub converged: bool,
    pub timing: RecoveryTiming,
}

impl<T: Real> RecoveryResult<T> {
    /// Final relative residual.
    pub fn final_error(&self) -> T {
        *self.errors.last().expect("errors always holds the initial residual")
    }

    /// Whether two runs produced bitwise-identical iterates and traces.
    /// Timings are ignored.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        self.x_hat == other.x_hat
            && self.s_hat == other.s_hat
            && self.errors == other.errors
            && self.sigma1_trace == other.sigma1_trace
            && self.zetas == other.zetas
            && self.zeta0 == other.zeta0
            && self.support_sizes == other.support_sizes
            && self.supports == other.supports
            && self.iterations == other.iterations
            && self.converged == other.converged
    }
}

/// Extra controls for a recovery run.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep the support of every `s_k` in [`RecoveryResult::supports`].
    pub record_supports: bool,
    /// Settings of every truncated SVD the run performs.
    pub lanczos: LanczosOptions,
}

/// How `L_{k+1}` is obtained from `w = z − s_{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Projection {
    /// Truncated SVD restricted to the tangent space at `L_k`.
    Tangent,
    /// Fresh truncated SVD of `H(w)`.
    Full,
}

/// `T_ζ(v)`: keeps the entries with `|v_t| > ζ`.
pub fn hard_threshold<T: Real>(v: &ComplexSignal<T>, zeta: T) -> SparseEstimate<T> {
    let (support, values) = v
        .iter()
        .enumerate()
        .filter(|(_, c)| modulus(**c) > zeta)
        .map(|(i, c)| (i, *c))
        .unzip();
    SparseEstimate::from_parts_unchecked(v.len(), support, values)
}

/// `‖z − x − s‖₂ / ‖z‖₂`, with 0/0 defined as 0.
pub fn residual<T: Real>(
    z: &ComplexSignal<T>,
    x_hat: &ComplexSignal<T>,
    s_hat: &SparseEstimate<T>,
) -> T {
    assert_eq!(z.len(), x_hat.len(), "length mismatch");
    assert_eq!(z.len(), s_hat.len(), "length mismatch");
    let diff = s_hat.subtract_from(&(z - x_hat));
    let num = diff.norm2();
    let den = z.norm2();
    if den == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::one() / T::zero()
        }
    } else {
        num / den
    }
}

/// One Cadzow step on `z`: `σ₁(H(z))` from the rank-`r` truncation of
/// `H(z)`, then incoherence and `σ₁` of the truncation of the denoised
/// signal's lift.
pub fn estimate_params<T: Real>(z: &ComplexSignal<T>, r: usize) -> Result<ParamEstimates<T>, T> {
    estimate_params_with(z, r, &LanczosOptions::default())
}

pub fn estimate_params_with<T: Real>(
    z: &ComplexSignal<T>,
    r: usize,
    opts: &LanczosOptions,
) -> Result<ParamEstimates<T>, T> {
    let plan = HankelPlan::new(z.len())?;
    let lz = truncated_svd_with(&plan.operator(z)?, r, opts)?;
    let denoised = plan.pinv_factored(&lz)?;
    let lx = truncated_svd_with(&plan.operator(&denoised)?, r, opts)?;
    Ok(ParamEstimates {
        mu_hat: incoherence(&lx),
        sigma1x_hat: lx.sigma1(),
        sigma1z: lz.sigma1(),
    })
}

/// Default parameters computed from [`estimate_params`].
pub fn default_params<T: Real>(
    z: &ComplexSignal<T>,
    r: usize,
    gamma: T,
    epsilon: T,
) -> Result<RecoveryParams<T>, T> {
    let est = estimate_params(z, r)?;
    let shape = hankel_shape::<T>(z.len())?;
    params_from_estimates(&est, shape.n, T::lit(shape.c_s()), r, gamma, epsilon)
}

/// `β = μ c_s r / (2n)` and `β_init = 2 μ c_s r σ₁ˣ / (n σ₁(H(z)))`.
///
/// An incoherence above its ceiling `n/(c_s r)` can only come from a noisy
/// estimate; it is clamped with a warning.
pub fn params_from_estimates<T: Real>(
    est: &ParamEstimates<T>,
    n: usize,
    c_s: T,
    r: usize,
    gamma: T,
    epsilon: T,
) -> Result<RecoveryParams<T>, T> {
    if !(est.sigma1x_hat > T::zero()) || !(est.sigma1z > T::zero()) {
        return Err(Error::InvalidInput(
            "degenerate estimates: zero leading singular value".into(),
        ));
    }
    if r == 0 {
        return Err(Error::InvalidInput("r must be at least 1".into()));
    }
    let n = T::from_count(n);
    let rr = T::from_count(r);
    let ceiling = n / (c_s * rr);
    let mut mu = est.mu_hat;
    if mu > ceiling {
        warn!("incoherence estimate {mu} exceeds its ceiling {ceiling}; clamping");
        mu = ceiling;
    }
    let params = RecoveryParams {
        r,
        epsilon,
        beta: mu * c_s * rr / (T::lit(2.0) * n),
        beta_init: T::lit(2.0) * mu * c_s * rr * est.sigma1x_hat / (n * est.sigma1z),
        gamma,
        max_iter: DEFAULT_MAX_ITER,
    };
    params.validate()?;
    Ok(params)
}

/// Initialization by one alternating projection step.
///
/// Returns `(L0, x0, s0)` with `ζ₀ = β_init σ₁(H(z))`, `s0 = T_ζ₀(z)`,
/// `L0` the rank-`r` truncation of `H(z − s0)` and `x0 = H†(L0)`.
pub fn asap_initialize<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
) -> Result<(FactoredRankR<T>, ComplexSignal<T>, SparseEstimate<T>), T> {
    params.validate()?;
    let plan = HankelPlan::new(z.len())?;
    check_rank(plan.shape(), params.r)?;
    let init = initialize(&plan, z, params, &LanczosOptions::default(), false)?;
    Ok((init.l, init.x, init.s))
}

/// Runs the accelerated recovery loop on `z`.
pub fn asap_recover<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
) -> Result<RecoveryResult<T>, T> {
    run(z, params, &RunOptions::default(), Projection::Tangent)
}

/// [`asap_recover`] with explicit [`RunOptions`].
pub fn asap_recover_with<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
    opts: &RunOptions,
) -> Result<RecoveryResult<T>, T> {
    run(z, params, opts, Projection::Tangent)
}

struct Init<T: Real> {
    l: FactoredRankR<T>,
    x: ComplexSignal<T>,
    s: SparseEstimate<T>,
    zeta0: T,
    spectra: Option<FactorSpectra<T>>,
}

fn initialize<T: Real>(
    plan: &HankelPlan<T>,
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
    lanczos: &LanczosOptions,
    keep_spectra: bool,
) -> Result<Init<T>, T> {
    let shape = plan.shape();
    if z.norm_inf() == T::zero() {
        return Ok(Init {
            l: FactoredRankR::zeros(shape.n1, shape.n2, params.r),
            x: ComplexSignal::zeros(shape.n),
            s: SparseEstimate::empty(shape.n),
            zeta0: T::zero(),
            spectra: None,
        });
    }
    let sigma1z = truncated_svd_with(&plan.operator(z)?, 1, lanczos)?.sigma1();
    let zeta0 = params.beta_init * sigma1z;
    let s = hard_threshold(z, zeta0);
    let w = s.subtract_from(z);
    let l = truncated_svd_with(&plan.operator(&w)?, params.r, lanczos)?;
    let (x, spectra) = pinv(plan, &l, keep_spectra)?;
    Ok(Init {
        l,
        x,
        s,
        zeta0,
        spectra,
    })
}

fn pinv<T: Real>(
    plan: &HankelPlan<T>,
    l: &FactoredRankR<T>,
    keep_spectra: bool,
) -> Result<(ComplexSignal<T>, Option<FactorSpectra<T>>), T> {
    if keep_spectra {
        let (x, spectra) = plan.pinv_with_spectra(l)?;
        Ok((x, Some(spectra)))
    } else {
        Ok((plan.pinv_factored(l)?, None))
    }
}

fn check_rank<T: Real>(shape: &HankelShape, r: usize) -> Result<(), T> {
    if r > shape.max_rank() {
        return Err(Error::InvalidInput(format!(
            "rank {r} exceeds min(n1, n2) = {}",
            shape.max_rank()
        )));
    }
    if shape.n < 2 * r + 1 {
        warn!("signal length {} is below 2r + 1 = {}", shape.n, 2 * r + 1);
    }
    Ok(())
}

pub(crate) fn run<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
    opts: &RunOptions,
    projection: Projection,
) -> Result<RecoveryResult<T>, T> {
    params.validate()?;
    let plan = HankelPlan::new(z.len())?;
    check_rank(plan.shape(), params.r)?;

    let start = Instant::now();
    let Init {
        mut l,
        mut x,
        mut s,
        zeta0,
        mut spectra,
    } = initialize(&plan, z, params, &opts.lanczos, projection == Projection::Tangent)?;
    let mut timing = RecoveryTiming {
        init: start.elapsed(),
        iterations: Vec::new(),
    };

    let mut errors = vec![residual(z, &x, &s)];
    if !errors[0].is_finite() {
        return Err(Error::Numeric { iteration: 0 });
    }
    let mut sigma1_trace = vec![l.sigma1()];
    let mut zetas = Vec::new();
    let mut support_sizes = vec![s.nnz()];
    let mut supports = opts.record_supports.then(|| vec![s.support().to_vec()]);

    let mut k = 0;
    while errors[k] >= params.epsilon && k < params.max_iter {
        let tick = Instant::now();
        let zeta = params.beta * params.gamma.powi(k as i32) * sigma1_trace[k];
        s = hard_threshold(&(z - &x), zeta);
        let w = s.subtract_from(z);
        l = match projection {
            Projection::Tangent => accelerated_step(&plan, &l, spectra.as_ref(), &w, params.r)?,
            Projection::Full => truncated_svd_with(&plan.operator(&w)?, params.r, &opts.lanczos)?,
        };
        (x, spectra) = pinv(&plan, &l, projection == Projection::Tangent)?;
        let err = residual(z, &x, &s);
        timing.iterations.push(tick.elapsed());
        k += 1;
        if !err.is_finite() || !x.is_finite() {
            return Err(Error::Numeric { iteration: k });
        }
        debug!("iteration {k}: residual {err:e}, zeta {zeta:e}, support {}", s.nnz());
        errors.push(err);
        sigma1_trace.push(l.sigma1());
        zetas.push(zeta);
        support_sizes.push(s.nnz());
        if let Some(sup) = supports.as_mut() {
            sup.push(s.support().to_vec());
        }
    }

    Ok(RecoveryResult {
        converged: errors[k] < params.epsilon,
        x_hat: x,
        s_hat: s,
        errors,
        sigma1_trace,
        zetas,
        zeta0,
        support_sizes,
        supports,
        iterations: k,
        timing,
    })
}
