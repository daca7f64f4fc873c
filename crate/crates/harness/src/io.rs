//! File formats: signals as `re,im` CSV, trial tables as CSV and run reports
//! as JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use asap_core::{Complex, Signal64};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Parses a signal file: header `re,im`, then one sample per line.
pub fn parse_signal(text: &str, path: &Path) -> Result<Signal64> {
    let parse_err = |line: usize, message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "re,im")) => {}
        Some((i, other)) => return Err(parse_err(i, format!("expected header `re,im`, found `{other}`"))),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| parse_err(i, "expected two comma-separated values".into()))?;
        let num = |field: &str| {
            field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(i, format!("`{}` is not a finite number", field.trim())))
        };
        samples.push(Complex::new(num(re)?, num(im)?));
    }
    if samples.is_empty() {
        return Err(parse_err(1, "no samples".into()));
    }
    Ok(Signal64::new(samples)?)
}

pub fn read_signal(path: &Path) -> Result<Signal64> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_signal(&text, path)
}

/// Seventeen significant digits, so every `f64` survives the round trip.
pub fn format_signal(x: &Signal64) -> String {
    let mut out = String::with_capacity(48 * x.len() + 6);
    out.push_str("re,im\n");
    for c in x.iter() {
        out.push_str(&format!("{:.16e},{:.16e}\n", c.re, c.im));
    }
    out
}

pub fn write_signal(path: &Path, x: &Signal64) -> Result<()> {
    fs::write(path, format_signal(x)).map_err(|e| HarnessError::io(path, e))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(|e| HarnessError::csv(path, e))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Creates `dir` and proves it writable, so sweeps fail before any compute.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::File::create(&probe)
        .and_then(|mut f| f.write_all(b""))
        .map_err(|e| HarnessError::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| HarnessError::io(&probe, e))
}
