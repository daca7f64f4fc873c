//! Monte Carlo sweeps: phase transition, efficiency and noise robustness.
//!
//! Every trial derives its seed from the base seed and its cell coordinates,
//! never from scheduling, so the non-timing output is identical for any
//! thread count.

use std::collections::BTreeMap;
use std::path::Path;

use asap_core::simgen::{
    add_noise, derive_seed, gen_corruptions, gen_signal, output_snr, CorruptionSpec, NoiseSpec,
};
use asap_core::{asap_recover, default_params, sap_recover, Signal64, Sparse64};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, CorruptionAxis, ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::io::{prepare_output_dir, write_csv};

/// Relative error at or below which a trial counts as recovered.
pub const SUCCESS_TOLERANCE: f64 = 1e-3;

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub r: usize,
    /// Index into the corruption axis.
    pub corruption_index: usize,
    pub m: usize,
    pub c: f64,
    pub gamma: f64,
    pub snr_db: f64,
}

impl Cell {
    pub fn trial_seed(&self, base: u64, trial: usize) -> u64 {
        derive_seed(
            base,
            &[
                self.n as u64,
                self.r as u64,
                self.m as u64,
                self.c.to_bits(),
                self.gamma.to_bits(),
                self.snr_db.to_bits(),
                trial as u64,
            ],
        )
    }
}

/// A generated observation `z = x + s + η`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub x: Signal64,
    pub s: Sparse64,
    pub eta: Signal64,
    pub z: Signal64,
}

/// Draws the instance of a cell for a trial seed.
///
/// `separation` is in units of `1/n`.
pub fn make_instance(
    cell: &Cell,
    seed: u64,
    separation: Option<f64>,
    damped: bool,
) -> Result<Instance> {
    let sep = separation.map(|s| s / cell.n as f64);
    let (x, _) = gen_signal::<f64>(cell.n, cell.r, sep, damped, seed)?;
    let spec = CorruptionSpec {
        count: cell.m,
        scale: cell.c,
        seed: derive_seed(seed, &[1]),
    };
    let s = gen_corruptions(&x, &spec)?;
    let (eta, _) = add_noise(
        &x,
        &NoiseSpec {
            snr_db: cell.snr_db,
            seed: derive_seed(seed, &[2]),
        },
    )?;
    let z = &(&x + &s.to_dense()) + &eta;
    Ok(Instance { x, s, eta, z })
}

/// Outcome of one algorithm on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub c: f64,
    pub gamma: f64,
    pub snr_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Present when the instance carries additive noise.
    pub output_snr: Option<f64>,
    /// Set when the solver returned an error instead of an estimate.
    pub failure: Option<String>,
    pub wall_total_ms: f64,
    pub wall_iter_ms: f64,
}

/// Mean outcome per cell and algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub c: f64,
    pub gamma: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub median_rel_error: f64,
    pub mean_iterations: f64,
    pub mean_output_snr: Option<f64>,
    pub wall_total_ms: f64,
    pub wall_iter_ms: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

/// The grid in row-major order: n, r, corruption, c, gamma, snr.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &r in &cfg.r {
            for ci in 0..cfg.corruption.len() {
                for &c in &cfg.c {
                    for &gamma in &cfg.gamma {
                        for &snr_db in &cfg.snr_db {
                            out.push(Cell {
                                n,
                                r,
                                corruption_index: ci,
                                m: cfg.corruption.count(ci, n),
                                c,
                                gamma,
                                snr_db,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = cell.trial_seed(cfg.seed, trial);
    let inst = make_instance(cell, seed, cfg.separation, cfg.damped)?;
    let params = default_params(&inst.z, cell.r, cell.gamma, cfg.epsilon).map(|mut p| {
        p.max_iter = cfg.max_iter;
        p
    });
    let noisy = cell.snr_db.is_finite();
    let records = cfg
        .algorithm
        .algorithms()
        .iter()
        .map(|&algorithm| {
            let outcome = params.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                match algorithm {
                    Algorithm::Asap => asap_recover(&inst.z, p),
                    Algorithm::Sap => sap_recover(&inst.z, p),
                }
                .map_err(|e| e.to_string())
            });
            let mut rec = TrialRecord {
                algorithm,
                n: cell.n,
                r: cell.r,
                m: cell.m,
                c: cell.c,
                gamma: cell.gamma,
                snr_db: cell.snr_db,
                trial,
                seed,
                success: false,
                rel_error: f64::INFINITY,
                residual: f64::INFINITY,
                iterations: 0,
                converged: false,
                output_snr: None,
                failure: None,
                wall_total_ms: 0.0,
                wall_iter_ms: 0.0,
            };
            match outcome {
                Ok(res) => {
                    rec.rel_error = res.x_hat.relative_error_to(&inst.x);
                    rec.success = rec.rel_error <= SUCCESS_TOLERANCE;
                    rec.residual = res.final_error();
                    rec.iterations = res.iterations;
                    rec.converged = res.converged;
                    rec.output_snr = noisy.then(|| output_snr(&inst.x, &res.x_hat));
                    rec.wall_total_ms = res.timing.total().as_secs_f64() * 1e3;
                    rec.wall_iter_ms = res.timing.mean_iteration().as_secs_f64() * 1e3;
                }
                Err(msg) => {
                    warn!("{} failed on n={} r={} m={} trial {trial}: {msg}", algorithm.name(), cell.n, cell.r, cell.m);
                    rec.failure = Some(msg);
                }
            }
            rec
        })
        .collect();
    Ok(records)
}

/// Runs every (cell, trial) pair, in parallel unless `threads` says otherwise.
///
/// Efficiency sweeps default to one thread so trials do not compete for
/// cores while being timed.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let threads = cfg.threads.or((cfg.kind == ExperimentKind::Efficiency).then_some(1));
    let jobs: Vec<(Cell, usize)> = cells(cfg)
        .into_iter()
        .flat_map(|cell| (0..cfg.trials).map(move |t| (cell, t)))
        .collect();
    info!("{} trials over {} threads", jobs.len(), threads.map_or("default".to_string(), |t| t.to_string()));
    let work = || -> Result<Vec<TrialRecord>> {
        let per_job: Vec<Vec<TrialRecord>> = jobs
            .par_iter()
            .map(|(cell, t)| run_trial(cfg, cell, *t))
            .collect::<Result<_>>()?;
        Ok(per_job.into_iter().flatten().collect())
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Groups records by cell and algorithm, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(Algorithm, usize, usize, usize, u64, u64, u64)> = Vec::new();
    let mut groups: BTreeMap<(Algorithm, usize, usize, usize, u64, u64, u64), Vec<&TrialRecord>> =
        BTreeMap::new();
    for rec in records {
        let key = (
            rec.algorithm,
            rec.n,
            rec.r,
            rec.m,
            rec.c.to_bits(),
            rec.gamma.to_bits(),
            rec.snr_db.to_bits(),
        );
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).expect("just inserted").push(rec);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let k = g.len() as f64;
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / k;
            let mut errs: Vec<f64> = g.iter().map(|r| r.rel_error).collect();
            errs.sort_by(f64::total_cmp);
            let first = g[0];
            SummaryRow {
                algorithm: first.algorithm,
                n: first.n,
                r: first.r,
                m: first.m,
                c: first.c,
                gamma: first.gamma,
                snr_db: first.snr_db,
                trials: g.len(),
                success_rate: mean(&|r| r.success as u8 as f64),
                median_rel_error: errs[errs.len() / 2],
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_output_snr: first.output_snr.map(|_| mean(&|r| r.output_snr.unwrap_or(f64::NEG_INFINITY))),
                wall_total_ms: mean(&|r| r.wall_total_ms),
                wall_iter_ms: mean(&|r| r.wall_iter_ms),
            }
        })
        .collect()
}

/// Success rates as an `r × corruption` matrix, one block of rows per
/// combination of the remaining axes.
pub fn write_success_matrix(
    path: &Path,
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    summary: &[SummaryRow],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let mut header = vec!["n".to_string(), "c".into(), "gamma".into(), "snr_db".into(), "r".into()];
    header.extend((0..cfg.corruption.len()).map(|i| match &cfg.corruption {
        CorruptionAxis::Count(v) => format!("m={}", v[i]),
        CorruptionAxis::Rate(v) => format!("alpha={}", v[i]),
    }));
    w.write_record(&header).map_err(|e| HarnessError::csv(path, e))?;
    let rate = |n: usize, r: usize, m: usize, c: f64, gamma: f64, snr: f64| {
        summary
            .iter()
            .find(|s| {
                s.algorithm == algorithm
                    && (s.n, s.r, s.m) == (n, r, m)
                    && s.c.to_bits() == c.to_bits()
                    && s.gamma.to_bits() == gamma.to_bits()
                    && s.snr_db.to_bits() == snr.to_bits()
            })
            .map(|s| s.success_rate)
    };
    for &n in &cfg.n {
        for &c in &cfg.c {
            for &gamma in &cfg.gamma {
                for &snr in &cfg.snr_db {
                    for &r in &cfg.r {
                        let mut row = vec![n.to_string(), c.to_string(), gamma.to_string(), snr.to_string(), r.to_string()];
                        for i in 0..cfg.corruption.len() {
                            let m = cfg.corruption.count(i, n);
                            row.push(rate(n, r, m, c, gamma, snr).map_or(String::new(), |v| v.to_string()));
                        }
                        w.write_record(&row).map_err(|e| HarnessError::csv(path, e))?;
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Runs a sweep and writes `trials.csv`, `summary.csv`, a copy of the
/// config and, for phase transitions, one success matrix per algorithm.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    prepare_output_dir(&cfg.out)?;
    let records = run_trials(cfg)?;
    let summary = summarize(&records);
    write_csv(&cfg.out.join("trials.csv"), &records)?;
    write_csv(&cfg.out.join("summary.csv"), &summary)?;
    let cfg_path = cfg.out.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml_string()).map_err(|e| HarnessError::io(&cfg_path, e))?;
    if cfg.kind == ExperimentKind::PhaseTransition {
        for &alg in cfg.algorithm.algorithms() {
            let path = cfg.out.join(format!("success_matrix_{}.csv", alg.name()));
            write_success_matrix(&path, cfg, alg, &summary)?;
        }
    }
    Ok(ExperimentOutput { records, summary })
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(HarnessError::Config(format!("expected a {kind:?} config, got {:?}", cfg.kind)));
    }
    Ok(())
}

pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    expect_kind(cfg, ExperimentKind::PhaseTransition)?;
    run_experiment(cfg)
}

pub fn run_efficiency(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    expect_kind(cfg, ExperimentKind::Efficiency)?;
    run_experiment(cfg)
}

pub fn run_noise(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    expect_kind(cfg, ExperimentKind::Noise)?;
    run_experiment(cfg)
}
