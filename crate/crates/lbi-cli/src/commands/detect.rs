//! `lbi detect`: run the solver on a signal file and report breaks.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use lbi_core::signal::Signal;
use lbi_core::solver::{solve, BreakReport, IterationBudget, SolverConfig};
use serde_json::json;

use crate::config::Defaults;
use crate::io;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Input signal: CSV (one sample per line, optional header) or a
    /// .json record {n, scale_factor, samples}.
    #[arg(long, short)]
    pub input: PathBuf,
    /// L1 weight of the iteration (required here or in the config file).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Iteration budget per data point (L = value * N).
    #[arg(long)]
    pub iterations_per_sample: Option<u64>,
    /// Total iteration budget, overriding --iterations-per-sample.
    #[arg(long, conflicts_with = "iterations_per_sample")]
    pub iterations: Option<u64>,
    /// Scalar domain: double, fixed, or fixed:sI.F.
    #[arg(long)]
    pub domain: Option<String>,
    /// Fixed-point format for --domain fixed (e.g. s4.16).
    #[arg(long)]
    pub format: Option<String>,
    /// Skip the divide-by-max pre-scaling.
    #[arg(long)]
    pub no_scale: bool,
    /// Refit magnitudes by ordinary least squares on the support.
    #[arg(long)]
    pub ols: bool,
    /// Absolute support threshold on |beta| (default 0: exact nonzeros).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Support threshold as a fraction of max |beta|.
    #[arg(long, conflicts_with = "threshold")]
    pub relative_threshold: Option<f64>,
    /// Report path (default: <output-dir>/<input-stem>.report.json).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Output directory used when --output is not given.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

pub fn resolve_threshold(
    beta: &[f64],
    absolute: Option<f64>,
    relative: Option<f64>,
) -> Result<f64> {
    if let Some(t) = absolute {
        if t < 0.0 {
            bail!("threshold must be non-negative");
        }
        return Ok(t);
    }
    if let Some(fraction) = relative {
        if !(0.0..=1.0).contains(&fraction) {
            bail!("relative threshold must be in [0, 1]");
        }
        let peak = beta.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        return Ok(fraction * peak);
    }
    Ok(0.0)
}

pub fn prepare_signal(raw: Signal, no_scale: bool) -> Result<Signal> {
    if no_scale {
        Ok(raw)
    } else {
        raw.scaled()
            .context("scaling failed (all-zero signal); pass --no-scale to skip")
    }
}

pub fn run(args: DetectArgs, defaults: &Defaults) -> Result<()> {
    let lambda = defaults.lambda(args.lambda)?;
    let budget = match args.iterations {
        Some(total) => IterationBudget::Total(total),
        None => IterationBudget::PerSample(
            defaults.iterations_per_sample(args.iterations_per_sample),
        ),
    };
    let domain = defaults.domain(args.domain.as_deref(), args.format.as_deref())?;

    let raw = io::read_signal(&args.input)?;
    let signal = prepare_signal(raw, args.no_scale)?;
    let config = SolverConfig {
        lambda,
        budget,
        domain,
    };
    let solution = solve(&signal, &config)?;
    let threshold = resolve_threshold(
        &solution.beta_f64(),
        args.threshold,
        args.relative_threshold,
    )?;
    let report = BreakReport::from_solution(&solution, &signal, lambda, threshold, args.ols)?;

    let output = args.output.clone().unwrap_or_else(|| {
        let stem = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "signal".to_string());
        defaults
            .output_dir(args.output_dir.as_deref())
            .join(format!("{stem}.report.json"))
    });
    io::write_json(&output, &report)?;

    let mut manifest = RunManifest::new(
        "detect",
        json!({
            "input": args.input.display().to_string(),
            "lambda": lambda,
            "iterations": solution.iterations(),
            "domain": solution.label(),
            "scaled": !args.no_scale,
            "ols": args.ols,
            "threshold": threshold,
        }),
        None,
    );
    manifest.record_input(&args.input)?;
    manifest.record_output(&output)?;
    manifest.write(&output.with_extension("manifest.json"))?;

    println!(
        "{}: {} break(s) at {:?} -> {}",
        solution.label(),
        report.support.len(),
        report.support,
        output.display()
    );
    Ok(())
}
