//! Experiment orchestration and file plumbing around `asap-core`.

// `!(x > 0.0)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod recover;

pub use config::{Algorithm, AlgorithmChoice, CorruptionAxis, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use experiments::{
    make_instance, run_efficiency, run_experiment, run_noise, run_phase_transition, run_trials,
    summarize, Cell, ExperimentOutput, Instance, SummaryRow, TrialRecord, SUCCESS_TOLERANCE,
};
pub use recover::{recover_file, RecoverOutputs, RecoverSettings, RunReport};
