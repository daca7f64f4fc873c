use std::path::PathBuf;
use std::process::ExitCode;

use asap_harness::config::{AlgorithmChoice, CorruptionAxis, ExperimentConfig, ExperimentKind};
use asap_harness::experiments::{make_instance, run_experiment, Cell};
use asap_harness::io::{prepare_output_dir, write_signal};
use asap_harness::recover::{recover_file, RecoverSettings};
use asap_harness::{HarnessError, Result};
use clap::{Args, Parser, Subcommand};

/// Robust recovery of spectrally sparse signals.
#[derive(Parser)]
#[command(name = "asap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a signal stored as `re,im` CSV.
    Recover(RecoverArgs),
    /// Success-rate sweep over model order and corruption count.
    Pt(SweepArgs),
    /// Wall-time comparison of the accelerated and full-SVD solvers.
    Eff(SweepArgs),
    /// Output SNR under additive noise and outliers.
    Noise(SweepArgs),
    /// Write one synthetic instance (x, s, z) to CSV files.
    Gen(GenArgs),
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_init: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    /// Corruption counts.
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha")]
    m: Option<Vec<usize>>,
    /// Corruption rates.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmChoice>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Minimum frequency separation in units of 1/n.
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    damped: bool,
    #[arg(long, env = "ASAP_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0, conflicts_with = "alpha")]
    m: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = f64::INFINITY, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    damped: bool,
    #[arg(long)]
    out: PathBuf,
}

impl SweepArgs {
    fn into_config(self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::from_file(path)?;
                if cfg.kind != kind {
                    return Err(HarnessError::Config(format!(
                        "{} describes a {:?} sweep",
                        path.display(),
                        cfg.kind
                    )));
                }
                cfg
            }
            None => ExperimentConfig::preset(kind),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        set!(n, r, c, gamma, snr_db, trials, seed, algorithm, epsilon, max_iter, out);
        if let Some(m) = self.m {
            cfg.corruption = CorruptionAxis::Count(m);
        }
        if let Some(a) = self.alpha {
            cfg.corruption = CorruptionAxis::Rate(a);
        }
        if self.separation.is_some() {
            cfg.separation = self.separation;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.damped |= self.damped;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sweep(args: SweepArgs, kind: ExperimentKind) -> Result<ExitCode> {
    let cfg = args.into_config(kind)?;
    let out = run_experiment(&cfg)?;
    for row in &out.summary {
        println!(
            "{:<4} n={:<6} r={:<3} m={:<5} c={} gamma={} snr={} success={:.2} iter={:.1} wall/iter={:.3}ms{}",
            row.algorithm.name(),
            row.n,
            row.r,
            row.m,
            row.c,
            row.gamma,
            row.snr_db,
            row.success_rate,
            row.mean_iterations,
            row.wall_iter_ms,
            row.mean_output_snr.map_or(String::new(), |s| format!(" snr_out={s:.1}dB")),
        );
    }
    println!("results written to {}", cfg.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Recover(a) => {
            let settings = RecoverSettings {
                r: a.r,
                gamma: a.gamma,
                epsilon: a.epsilon,
                beta: a.beta,
                beta_init: a.beta_init,
                max_iter: a.max_iter,
            };
            let (res, outputs) = recover_file(&a.input, &settings, &a.out)?;
            println!(
                "iterations={} converged={} residual={:e}",
                res.iterations,
                res.converged,
                res.final_error()
            );
            println!("wrote {}", outputs.report.display());
            Ok(if res.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Pt(a) => sweep(a, ExperimentKind::PhaseTransition),
        Command::Eff(a) => sweep(a, ExperimentKind::Efficiency),
        Command::Noise(a) => sweep(a, ExperimentKind::Noise),
        Command::Gen(a) => {
            let m = a.alpha.map_or(a.m, |al| (al * a.n as f64).round() as usize);
            let cell = Cell {
                n: a.n,
                r: a.r,
                corruption_index: 0,
                m,
                c: a.c,
                gamma: 0.5,
                snr_db: a.snr_db,
            };
            let inst = make_instance(&cell, a.seed, a.separation, a.damped)?;
            prepare_output_dir(&a.out)?;
            write_signal(&a.out.join("x.csv"), &inst.x)?;
            write_signal(&a.out.join("s.csv"), &inst.s.to_dense())?;
            write_signal(&a.out.join("z.csv"), &inst.z)?;
            println!("wrote x.csv, s.csv, z.csv to {}", a.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
