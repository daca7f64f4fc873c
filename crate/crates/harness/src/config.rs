//! Experiment configuration: a TOML file, command-line overrides, or both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    Efficiency,
    Noise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    Asap,
    Sap,
    Both,
}

impl AlgorithmChoice {
    pub fn algorithms(self) -> &'static [Algorithm] {
        match self {
            AlgorithmChoice::Asap => &[Algorithm::Asap],
            AlgorithmChoice::Sap => &[Algorithm::Sap],
            AlgorithmChoice::Both => &[Algorithm::Asap, Algorithm::Sap],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Asap,
    Sap,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Asap => "asap",
            Algorithm::Sap => "sap",
        }
    }
}

/// How many samples each instance corrupts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionAxis {
    /// Absolute counts `m`.
    Count(Vec<usize>),
    /// Rates `α`, with `m = round(α n)`.
    Rate(Vec<f64>),
}

impl CorruptionAxis {
    pub fn len(&self) -> usize {
        match self {
            CorruptionAxis::Count(v) => v.len(),
            CorruptionAxis::Rate(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Corruption count of entry `i` at length `n`.
    pub fn count(&self, i: usize, n: usize) -> usize {
        match self {
            CorruptionAxis::Count(v) => v[i],
            CorruptionAxis::Rate(v) => (v[i] * n as f64).round() as usize,
        }
    }
}

/// A sweep over the Cartesian product of its axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub corruption: CorruptionAxis,
    /// Corruption magnitude relative to the mean signal modulus.
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Input SNR in dB; `inf` means no additive noise.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub algorithm: AlgorithmChoice,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Minimum wrap-around frequency distance in units of `1/n`.
    pub separation: Option<f64>,
    pub damped: bool,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// The desk-scale defaults for each kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            n: vec![125],
            r: (1..=10).collect(),
            corruption: CorruptionAxis::Count((0..=50).step_by(5).collect()),
            c: vec![1.0],
            gamma: vec![0.95],
            snr_db: vec![f64::INFINITY],
            trials: 50,
            seed: 0,
            algorithm: AlgorithmChoice::Asap,
            epsilon: 1e-6,
            max_iter: asap_core::asap::DEFAULT_MAX_ITER,
            separation: None,
            damped: false,
            out: PathBuf::from("results"),
            threads: None,
        };
        match kind {
            ExperimentKind::PhaseTransition => base,
            ExperimentKind::Efficiency => ExperimentConfig {
                n: vec![1 << 13, 1 << 14, 1 << 15, 1 << 16],
                r: vec![5],
                corruption: CorruptionAxis::Rate(vec![0.1]),
                gamma: vec![0.5],
                trials: 10,
                algorithm: AlgorithmChoice::Both,
                ..base
            },
            ExperimentKind::Noise => ExperimentConfig {
                n: vec![4095],
                r: vec![5],
                corruption: CorruptionAxis::Rate(vec![0.1]),
                gamma: vec![0.7],
                snr_db: vec![80.0, 60.0, 40.0, 20.0, 0.0],
                trials: 10,
                ..base
            },
        }
    }

    /// Parses a config; keys left out fall back to the preset of its `kind`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config_err = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
        let given: toml::Table = text.parse().map_err(|e| config_err(&e))?;
        let kind: ExperimentKind = given
            .get("kind")
            .ok_or_else(|| HarnessError::Config("missing key `kind`".into()))?
            .clone()
            .try_into()
            .map_err(|e| config_err(&e))?;
        let mut merged = toml::Table::try_from(Self::preset(kind)).map_err(|e| config_err(&e))?;
        merged.extend(given);
        let cfg: Self = merged.try_into().map_err(|e| config_err(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.n.is_empty()
            || self.r.is_empty()
            || self.corruption.is_empty()
            || self.c.is_empty()
            || self.gamma.is_empty()
            || self.snr_db.is_empty()
        {
            return bad("every grid axis needs at least one value");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n.contains(&0) || self.r.contains(&0) {
            return bad("n and r must be positive");
        }
        if self.gamma.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.c.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return bad("c must be positive and finite");
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("snr_db must not be NaN");
        }
        if !(self.epsilon > 0.0) || self.max_iter == 0 {
            return bad("epsilon must be positive and max_iter at least 1");
        }
        if let CorruptionAxis::Rate(v) = &self.corruption {
            if v.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return bad("corruption rates must lie in [0, 1]");
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        for &n in &self.n {
            for &r in &self.r {
                if r > n.div_ceil(2) {
                    return Err(HarnessError::Config(format!("r = {r} too large for n = {n}")));
                }
                for i in 0..self.corruption.len() {
                    if self.corruption.count(i, n) > n {
                        return Err(HarnessError::Config(format!(
                            "more corruptions than samples at n = {n}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
