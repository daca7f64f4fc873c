//! Robust recovery of spectrally sparse signals from sparse corruptions.
//!
//! A signal `x ∈ Cⁿ` made of `r` complex exponentials lifts to a rank-`r`
//! Hankel matrix. Given `z = x + s` with `s` sparse, [`asap_recover`] alternates
//! hard thresholding of the residual with a rank-`r` projection computed in the
//! tangent space of the previous iterate. All Hankel products go through FFTs,
//! so an iteration costs `O(r² n + r n log n)`.
//!
//! Everything is generic over the real scalar ([`f32`] or [`f64`]); the `*64`
//! and `*32` aliases below fix the precision.

// `!(x > 0.0)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asap;
pub mod baselines;
pub mod error;
pub mod hankel;
pub mod lowrank;
pub mod scalar;
pub mod signal;
pub mod simgen;
pub mod sparse;

pub use asap::{
    asap_initialize, asap_recover, asap_recover_with, default_params, estimate_params,
    hard_threshold, params_from_estimates, residual, ParamEstimates, RecoveryParams,
    RecoveryResult, RecoveryTiming, RunOptions,
};
pub use baselines::{cadzow_denoise, sap_recover, sap_recover_with};
pub use error::{Error, Result};
pub use hankel::{HankelOperator, HankelPlan, HankelShape};
pub use lowrank::{FactoredRankR, LanczosOptions};
pub use scalar::{Complex, Real};
pub use signal::ComplexSignal;
pub use sparse::SparseEstimate;

pub type Signal64 = ComplexSignal<f64>;
pub type Signal32 = ComplexSignal<f32>;
pub type Sparse64 = SparseEstimate<f64>;
pub type Sparse32 = SparseEstimate<f32>;
pub type Factored64 = FactoredRankR<f64>;
pub type Factored32 = FactoredRankR<f32>;
pub type Params64 = RecoveryParams<f64>;
pub type Params32 = RecoveryParams<f32>;
pub type Result64 = RecoveryResult<f64>;
pub type Result32 = RecoveryResult<f32>;
pub type Plan64 = HankelPlan<f64>;
pub type Plan32 = HankelPlan<f32>;
