//! `lbi experiment-accuracy`: paired double/fixed estimation-quality study
//! over randomly generated testbenches.

use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use clap::Args;
use lbi_core::signal::{generate_testbench, squared_error, BreakProfile, Signal};
use lbi_core::solver::{ols_debias, LbiSolver, ScalarDomain};
use rayon::prelude::*;
use serde_json::json;

use crate::config::Defaults;
use crate::io;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Profile length N.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Number of paired trials (each trial solves the same profile in both
    /// domains).
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    /// Iterations-per-sample checkpoints, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [50u64, 150, 300, 450, 650])]
    pub iterations_per_sample: Vec<u64>,
    /// White-noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,
    /// Break magnitude interval "low,high" (sign randomized).
    #[arg(long, default_value = "0.5,1.5")]
    pub magnitude_range: String,
    /// Breaks per generated profile.
    #[arg(long, default_value_t = 5)]
    pub breaks: usize,
    /// Base seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// L1 weight (preset 1.0 on scaled data).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Fixed-point word format.
    #[arg(long)]
    pub format: Option<String>,
    /// Full-scale study: 15000 trials (hours of compute; the default
    /// desk-scale run keeps the same statistics at 50 trials).
    #[arg(long)]
    pub full: bool,
    /// Output CSV path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Raw and OLS-refit squared errors for one domain at each checkpoint.
struct DomainErrors {
    raw: Vec<f64>,
    ols: Vec<f64>,
}

fn run_domain<D: ScalarDomain>(
    mut solver: LbiSolver<D>,
    scaled: &Signal,
    profile: &BreakProfile,
    totals: &[u64],
) -> Result<DomainErrors> {
    let mut raw = Vec::with_capacity(totals.len());
    let mut ols = Vec::with_capacity(totals.len());
    let descale = scaled.scale_factor();
    let mut done = 0u64;
    for &target in totals {
        solver.run(target - done);
        done = target;
        let estimate: Vec<f64> = solver.beta_f64().iter().map(|b| b * descale).collect();
        raw.push(squared_error(&estimate, profile)?.squared_error_norm);

        let support = solver.support(0.0);
        let refit_estimate = if support.is_empty() {
            vec![0.0; profile.n()]
        } else {
            let fit = ols_debias(scaled, &support)?;
            let mut dense = vec![0.0; profile.n()];
            for (&index, &magnitude) in fit.support.iter().zip(&fit.magnitudes) {
                dense[index - 1] = magnitude;
            }
            dense
        };
        ols.push(squared_error(&refit_estimate, profile)?.squared_error_norm);
    }
    Ok(DomainErrors { raw, ols })
}

fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(args: ExperimentArgs, defaults: &Defaults) -> Result<()> {
    let trials = if args.full { 15_000 } else { args.trials };
    ensure!(trials >= 1, "trials must be at least 1");
    ensure!(!args.iterations_per_sample.is_empty(), "need at least one iterations-per-sample value");
    let mut checkpoints = args.iterations_per_sample.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    ensure!(checkpoints[0] >= 1, "iterations-per-sample must be at least 1");
    let magnitude_range: (f64, f64) = io::parse_pair(&args.magnitude_range, "magnitude range")?;
    let format = defaults.format(args.format.as_deref())?;
    let lambda = args.lambda;
    let totals: Vec<u64> = checkpoints.iter().map(|p| p * args.n as u64).collect();

    // Trials are independent; errors are aggregated in trial order below so
    // the output does not depend on scheduling.
    let per_trial: Vec<(DomainErrors, DomainErrors)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(DomainErrors, DomainErrors)> {
            let (profile, signal) = generate_testbench(
                args.n,
                args.breaks,
                magnitude_range,
                args.noise_sigma,
                args.seed + trial,
            )?;
            let scaled = signal
                .scaled()
                .context("generated signal is all zero; raise breaks or noise")?;
            let double = run_domain(
                LbiSolver::double(&scaled, lambda)?,
                &scaled,
                &profile,
                &totals,
            )?;
            let fixed = run_domain(
                LbiSolver::fixed(&scaled, lambda, format)?,
                &scaled,
                &profile,
                &totals,
            )?;
            Ok((double, fixed))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from(
        "domain,iterations_per_sample,mean_squared_error,std_squared_error,\
         mean_squared_error_ols,std_squared_error_ols,trials\n",
    );
    let fixed_label = format!("fixed:{format}");
    let rows: [(&str, fn(&(DomainErrors, DomainErrors)) -> &DomainErrors); 2] = [
        ("double", |pair| &pair.0),
        (fixed_label.as_str(), |pair| &pair.1),
    ];
    for (label, pick) in rows {
        for (slot, &per) in checkpoints.iter().enumerate() {
            let raw: Vec<f64> = per_trial.iter().map(|pair| pick(pair).raw[slot]).collect();
            let ols: Vec<f64> = per_trial.iter().map(|pair| pick(pair).ols[slot]).collect();
            let (raw_mean, raw_std) = mean_and_std(&raw);
            let (ols_mean, ols_std) = mean_and_std(&ols);
            csv.push_str(&format!(
                "{label},{per},{raw_mean},{raw_std},{ols_mean},{ols_std},{trials}\n"
            ));
        }
    }

    let output = args.output.clone().unwrap_or_else(|| {
        defaults
            .output_dir(args.output_dir.as_deref())
            .join("accuracy.csv")
    });
    io::write_text(&output, &csv)?;

    let mut manifest = RunManifest::new(
        "experiment-accuracy",
        json!({
            "n": args.n,
            "trials": trials,
            "iterations_per_sample": checkpoints,
            "noise_sigma": args.noise_sigma,
            "magnitude_range": [magnitude_range.0, magnitude_range.1],
            "breaks": args.breaks,
            "lambda": lambda,
            "format": format.to_string(),
        }),
        Some(args.seed),
    );
    manifest.record_output(&output)?;
    manifest.write(&output.with_extension("manifest.json"))?;

    println!(
        "{} paired trials x {} checkpoints -> {}",
        trials,
        checkpoints.len(),
        output.display()
    );
    Ok(())
}
