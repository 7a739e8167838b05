//! `lbi sweep-cycles`: evaluate the clock-cycle estimator across a range of
//! bank counts or data lengths.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use lbi_core::cycle::{self, CycleEstimate, SweepAxis};
use serde_json::json;

use crate::config::Defaults;
use crate::io;
use crate::manifest::RunManifest;
use crate::presets;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AxisArg {
    /// Vary the number of parallel banks (requires --n).
    M,
    /// Vary the number of data points (requires --banks).
    N,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Inclusive sweep range "low,high".
    #[arg(long)]
    pub range: String,
    /// Fixed number of data points for --axis m.
    #[arg(long)]
    pub n: Option<u64>,
    /// Fixed number of banks for --axis n.
    #[arg(long)]
    pub banks: Option<u64>,
    #[arg(long, default_value_t = 650)]
    pub iterations_per_sample: u64,
    #[arg(long, default_value_t = cycle::DEFAULT_F_OVERHEAD)]
    pub f_overhead: u64,
    /// Convert cycles to seconds at this fixed clock frequency.
    #[arg(long)]
    pub clock_mhz: Option<f64>,
    /// Device preset supplying per-bank-count frequencies (and a bank limit
    /// warning).
    #[arg(long, conflicts_with = "clock_mhz")]
    pub device: Option<String>,
    /// Device preset file overriding the checked-in table.
    #[arg(long)]
    pub devices_file: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

pub fn run(args: SweepArgs, defaults: &Defaults) -> Result<()> {
    let range: (u64, u64) = io::parse_pair(&args.range, "range")?;
    let (axis, fixed) = match args.axis {
        AxisArg::M => (
            SweepAxis::Banks,
            args.n.context("--axis m needs --n <data points>")?,
        ),
        AxisArg::N => (
            SweepAxis::DataPoints,
            args.banks.context("--axis n needs --banks <count>")?,
        ),
    };
    if let Some(mhz) = args.clock_mhz {
        if mhz <= 0.0 {
            bail!("clock frequency must be positive");
        }
    }
    let device = match &args.device {
        Some(name) => {
            let all = presets::load(args.devices_file.as_deref())?;
            Some(presets::find(&all, name)?)
        }
        None => None,
    };

    let points = cycle::sweep(axis, range, fixed, args.iterations_per_sample, args.f_overhead)?;

    if let Some(device) = &device {
        let max_banks = match axis {
            SweepAxis::Banks => range.1,
            SweepAxis::DataPoints => fixed,
        };
        if device.exceeds_banks(max_banks) {
            eprintln!(
                "warning: {} banks exceed the {} available on {}",
                max_banks, device.max_bram_banks, device.name
            );
        }
    }

    let mut csv = String::from("x,cycles,seconds\n");
    for point in &points {
        let estimate = CycleEstimate {
            total_cycles: point.cycles,
            f_overhead: args.f_overhead,
        };
        let banks = match axis {
            SweepAxis::Banks => point.x,
            SweepAxis::DataPoints => fixed,
        };
        let seconds = args
            .clock_mhz
            .or_else(|| device.as_ref().and_then(|d| d.clock_mhz(banks)))
            .map(|mhz| estimate.processing_time_s(mhz));
        match seconds {
            Some(s) => csv.push_str(&format!("{},{},{}\n", point.x, point.cycles, s)),
            None => csv.push_str(&format!("{},{},\n", point.x, point.cycles)),
        }
    }

    let output = args.output.clone().unwrap_or_else(|| {
        defaults
            .output_dir(args.output_dir.as_deref())
            .join("sweep.csv")
    });
    io::write_text(&output, &csv)?;

    let mut manifest = RunManifest::new(
        "sweep-cycles",
        json!({
            "axis": format!("{:?}", args.axis),
            "range": [range.0, range.1],
            "fixed": fixed,
            "iterations_per_sample": args.iterations_per_sample,
            "f_overhead": args.f_overhead,
            "clock_mhz": args.clock_mhz,
            "device": args.device,
        }),
        None,
    );
    manifest.record_output(&output)?;
    manifest.write(&output.with_extension("manifest.json"))?;

    println!("{} points -> {}", points.len(), output.display());
    Ok(())
}
