//! `lbi gen-profile`: emit a random break profile and its noisy signal.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use lbi_core::signal::generate_testbench;
use serde_json::json;

use crate::config::Defaults;
use crate::io;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct GenProfileArgs {
    /// Profile length N.
    #[arg(long)]
    pub n: usize,
    /// Number of breaks (positions drawn without replacement).
    #[arg(long)]
    pub breaks: usize,
    /// Break magnitude interval "low,high" (sign randomized).
    #[arg(long, default_value = "0.5,1.5")]
    pub magnitude_range: String,
    /// White-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes <prefix>.profile.json and <prefix>.signal.csv.
    #[arg(long, short)]
    pub output_prefix: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

pub fn run(args: GenProfileArgs, defaults: &Defaults) -> Result<()> {
    let magnitude_range: (f64, f64) = io::parse_pair(&args.magnitude_range, "magnitude range")?;
    let (profile, signal) = generate_testbench(
        args.n,
        args.breaks,
        magnitude_range,
        args.noise_sigma,
        args.seed,
    )?;

    let prefix = args.output_prefix.clone().unwrap_or_else(|| {
        defaults
            .output_dir(args.output_dir.as_deref())
            .join("testbench")
    });
    let profile_path = prefix.with_extension("profile.json");
    let signal_path = prefix.with_extension("signal.csv");
    io::write_json(&profile_path, &profile)?;
    io::write_signal_csv(&signal_path, &signal)?;

    let mut manifest = RunManifest::new(
        "gen-profile",
        json!({
            "n": args.n,
            "breaks": args.breaks,
            "magnitude_range": [magnitude_range.0, magnitude_range.1],
            "noise_sigma": args.noise_sigma,
        }),
        Some(args.seed),
    );
    manifest.record_output(&profile_path)?;
    manifest.record_output(&signal_path)?;
    manifest.write(&prefix.with_extension("manifest.json"))?;

    println!(
        "{} break(s) over {} samples -> {}, {}",
        profile.num_breaks(),
        args.n,
        profile_path.display(),
        signal_path.display()
    );
    Ok(())
}
