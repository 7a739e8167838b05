//! Device presets: bank limits and synthesis clock frequencies, loaded from
//! the checked-in `data/devices.toml` (or a user-supplied override file).

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use lbi_core::cycle::DevicePreset;
use serde::Deserialize;

const BUILTIN: &str = include_str!("../data/devices.toml");

#[derive(Deserialize)]
struct PresetsFile {
    device: Vec<DeviceEntry>,
}

#[derive(Deserialize)]
struct DeviceEntry {
    name: String,
    #[allow(dead_code)]
    part: Option<String>,
    max_bram_banks: u64,
    clock_mhz: BTreeMap<String, f64>,
}

fn parse(text: &str) -> Result<Vec<DevicePreset>> {
    let file: PresetsFile = toml::from_str(text).context("invalid device preset file")?;
    file.device
        .into_iter()
        .map(|entry| {
            let mut clock_mhz_by_banks = Vec::new();
            for (banks, mhz) in entry.clock_mhz {
                let banks: u64 = banks
                    .parse()
                    .with_context(|| format!("bank count {banks:?} is not an integer"))?;
                clock_mhz_by_banks.push((banks, mhz));
            }
            clock_mhz_by_banks.sort_unstable_by_key(|&(banks, _)| banks);
            Ok(DevicePreset {
                name: entry.name,
                max_bram_banks: entry.max_bram_banks,
                clock_mhz_by_banks,
            })
        })
        .collect()
}

pub fn load(override_path: Option<&Path>) -> Result<Vec<DevicePreset>> {
    match override_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read device presets {}", path.display()))?;
            parse(&text)
        }
        None => parse(BUILTIN),
    }
}

pub fn find(presets: &[DevicePreset], name: &str) -> Result<DevicePreset> {
    presets
        .iter()
        .find(|p| p.name == name)
        .cloned()
        .with_context(|| {
            let known: Vec<&str> = presets.iter().map(|p| p.name.as_str()).collect();
            format!("unknown device {name:?}; available: {known:?}")
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_presets_parse() {
        let presets = load(None).unwrap();
        assert_eq!(presets.len(), 2);
        let stratix = find(&presets, "stratix-v").unwrap();
        assert_eq!(stratix.max_bram_banks, 2_000);
        assert_eq!(stratix.clock_mhz(1_024), Some(109.9));
        assert_eq!(stratix.clock_mhz(100), None);
        let cyclone = find(&presets, "cyclone-v").unwrap();
        assert_eq!(cyclone.clock_mhz(128), Some(95.37));
        assert!(find(&presets, "nope").is_err());
    }
}
