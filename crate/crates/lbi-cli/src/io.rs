//! File formats: signal CSV (one sample per line, optional header) and
//! pretty-printed JSON records.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lbi_core::signal::Signal;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Reads a signal from CSV or, for `.json` paths, from the JSON record
/// `{n, scale_factor, samples}`.
pub fn read_signal(path: &Path) -> Result<Signal> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read signal file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("{}: invalid signal record", path.display()))
    } else {
        read_signal_csv(path)
    }
}

pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read signal file {}", path.display()))?;
    let mut samples = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let cell = line.trim().trim_matches(',');
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(value) => samples.push(value),
            // Tolerate one leading header line.
            Err(_) if line_no == 0 => continue,
            Err(_) => bail!(
                "{}:{}: not a number: {cell:?}",
                path.display(),
                line_no + 1
            ),
        }
    }
    Signal::new(samples).with_context(|| format!("{}: empty signal", path.display()))
}

pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    let mut out = String::with_capacity(signal.n() * 12);
    for sample in signal.samples() {
        out.push_str(&format!("{sample}\n"));
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot digest {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Parses an inclusive "low,high" pair.
pub fn parse_pair<T: std::str::FromStr>(text: &str, what: &str) -> Result<(T, T)>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let (low, high) = text
        .split_once(',')
        .with_context(|| format!("{what} must be \"low,high\", got {text:?}"))?;
    Ok((
        low.trim().parse().with_context(|| format!("bad {what} low: {low:?}"))?,
        high.trim()
            .parse()
            .with_context(|| format!("bad {what} high: {high:?}"))?,
    ))
}
