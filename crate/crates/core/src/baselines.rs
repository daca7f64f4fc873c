//! Reference methods: the recovery loop with a full truncated SVD in place of
//! the tangent-space update, and Cadzow denoising.

use crate::asap::{run, Projection, RecoveryParams, RecoveryResult, RunOptions};
use crate::error::{Error, Result};
use crate::hankel::HankelPlan;
use crate::lowrank::{truncated_svd_with, LanczosOptions};
use crate::scalar::Real;
use crate::signal::ComplexSignal;

/// Fixed-rank structured alternating projections.
///
/// Same initialization, threshold schedule and stopping rule as
/// [`crate::asap::asap_recover`]; each iteration recomputes the rank-`r`
/// truncation of `H(z − s_{k+1})` from scratch.
pub fn sap_recover<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
) -> Result<RecoveryResult<T>, T> {
    run(z, params, &RunOptions::default(), Projection::Full)
}

pub fn sap_recover_with<T: Real>(
    z: &ComplexSignal<T>,
    params: &RecoveryParams<T>,
    opts: &RunOptions,
) -> Result<RecoveryResult<T>, T> {
    run(z, params, opts, Projection::Full)
}

/// `iters` rounds of `x ← H†(D_r H(x))` starting from `z`.
pub fn cadzow_denoise<T: Real>(
    z: &ComplexSignal<T>,
    r: usize,
    iters: usize,
) -> Result<ComplexSignal<T>, T> {
    if iters == 0 {
        return Err(Error::InvalidInput("iters must be at least 1".into()));
    }
    let plan = HankelPlan::new(z.len())?;
    let opts = LanczosOptions::default();
    let mut x = z.clone();
    for _ in 0..iters {
        let l = truncated_svd_with(&plan.operator(&x)?, r, &opts)?;
        x = plan.pinv_factored(&l)?;
    }
    Ok(x)
}
