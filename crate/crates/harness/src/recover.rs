//! Recovery of a signal stored on disk.

use std::path::{Path, PathBuf};

use asap_core::{asap_recover, default_params, Params64, Result64, Signal64};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{prepare_output_dir, read_signal, write_json, write_signal};

/// Settings for [`recover_file`]; `None` fields keep the estimated defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoverSettings {
    pub r: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: Option<f64>,
    pub beta_init: Option<f64>,
    pub max_iter: Option<usize>,
}

impl RecoverSettings {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            gamma: 0.95,
            epsilon: 1e-6,
            beta: None,
            beta_init: None,
            max_iter: None,
        }
    }

    /// Estimated defaults for `z` with the overrides applied.
    pub fn params_for(&self, z: &Signal64) -> Result<Params64> {
        let mut p = default_params(z, self.r, self.gamma, self.epsilon)?;
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(b) = self.beta_init {
            p.beta_init = b;
        }
        if let Some(k) = self.max_iter {
            p.max_iter = k;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub r: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub beta_init: f64,
    pub gamma: f64,
    pub max_iter: usize,
}

impl From<&Params64> for ParamsReport {
    fn from(p: &Params64) -> Self {
        Self {
            r: p.r,
            epsilon: p.epsilon,
            beta: p.beta,
            beta_init: p.beta_init,
            gamma: p.gamma,
            max_iter: p.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallReport {
    pub init: f64,
    pub iterations: Vec<f64>,
    pub total: f64,
}

/// The JSON run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub params: ParamsReport,
    pub n: usize,
    pub r: usize,
    pub err_trace: Vec<f64>,
    pub sigma1_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: WallReport,
}

impl RunReport {
    pub fn new(params: &Params64, res: &Result64) -> Self {
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        Self {
            params: params.into(),
            n: res.x_hat.len(),
            r: params.r,
            err_trace: res.errors.clone(),
            sigma1_trace: res.sigma1_trace.clone(),
            iterations: res.iterations,
            converged: res.converged,
            wall_ms: WallReport {
                init: ms(res.timing.init),
                iterations: res.timing.iterations.iter().copied().map(ms).collect(),
                total: ms(res.timing.total()),
            },
        }
    }
}

/// Paths written by [`recover_file`].
#[derive(Clone, Debug, PartialEq)]
pub struct RecoverOutputs {
    pub x_hat: PathBuf,
    pub s_hat: PathBuf,
    pub report: PathBuf,
}

/// Reads `input`, recovers it and writes `x_hat.csv`, `s_hat.csv` (dense)
/// and `report.json` into `out_dir`.
///
/// Outputs are written whether or not the run converged.
pub fn recover_file(
    input: &Path,
    settings: &RecoverSettings,
    out_dir: &Path,
) -> Result<(Result64, RecoverOutputs)> {
    let z = read_signal(input)?;
    prepare_output_dir(out_dir)?;
    let params = settings.params_for(&z)?;
    let res = asap_recover(&z, &params)?;
    let outputs = RecoverOutputs {
        x_hat: out_dir.join("x_hat.csv"),
        s_hat: out_dir.join("s_hat.csv"),
        report: out_dir.join("report.json"),
    };
    write_signal(&outputs.x_hat, &res.x_hat)?;
    write_signal(&outputs.s_hat, &res.s_hat.to_dense())?;
    write_json(&outputs.report, &RunReport::new(&params, &res))?;
    Ok((res, outputs))
}
