//! `lbi simulate-hw`: run the datapath simulator next to the golden
//! fixed-point solver, assert bit equality, and report cycles.

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args;
use lbi_core::cycle;
use lbi_core::fixed::FixedScalar;
use lbi_core::hwsim::{HwConfig, HwSimulator};
use lbi_core::signal::{generate_testbench, Signal};
use lbi_core::solver::{BreakReport, LbiSolver, Solution};
use serde::Serialize;
use serde_json::json;

use crate::config::Defaults;
use crate::errors::{CliError, CliResult};
use crate::io;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Input signal CSV; omit to generate a testbench with --gen-n.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Generate a random testbench of this length instead of reading a file.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub gen_n: Option<usize>,
    /// Break count for the generated testbench.
    #[arg(long, default_value_t = 3)]
    pub gen_breaks: usize,
    /// Noise standard deviation for the generated testbench.
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,
    /// Seed for the generated testbench.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of parallel memory banks M.
    #[arg(long, short = 'm')]
    pub banks: usize,
    /// Total iteration count L.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Iterations per data point when --iterations is not given.
    #[arg(long, conflicts_with = "iterations")]
    pub iterations_per_sample: Option<u64>,
    /// L1 weight (required here or in the config file).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fixed-point word format (e.g. s4.16).
    #[arg(long)]
    pub format: Option<String>,
    /// Fixed pre/post overhead cycles.
    #[arg(long, default_value_t = cycle::DEFAULT_F_OVERHEAD)]
    pub f_overhead: u64,
    /// Reciprocal pipeline depth.
    #[arg(long, default_value_t = 16)]
    pub cordic_depth: usize,
    /// Skip the divide-by-max pre-scaling.
    #[arg(long)]
    pub no_scale: bool,
    /// Refit magnitudes by ordinary least squares on the support.
    #[arg(long)]
    pub ols: bool,
    /// Directory for report.json, cycles.csv, vectors.json, summary.json.
    #[arg(long, short)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulationSummary {
    n: usize,
    banks: usize,
    iterations: u64,
    format: String,
    lambda: f64,
    simulated_cycles: u64,
    predicted_cycles: u64,
    #[serde(rename = "match")]
    cycles_match: bool,
    bit_exact: bool,
    saturation_events: u64,
}

#[derive(Serialize)]
struct GoldenVectors {
    format: String,
    beta_raw: Vec<i64>,
    v_raw: Vec<i64>,
}

fn load_signal(args: &SimulateArgs) -> Result<Signal> {
    match (&args.input, args.gen_n) {
        (Some(path), _) => io::read_signal(path),
        (None, Some(n)) => {
            let (_, signal) =
                generate_testbench(n, args.gen_breaks, (0.5, 1.5), args.noise_sigma, args.seed)?;
            Ok(signal)
        }
        (None, None) => unreachable!("clap enforces input or gen-n"),
    }
}

/// Re-runs both models step by step to locate the first divergent iteration
/// for the abort diagnostic.
fn diagnose_divergence(
    config: HwConfig,
    signal: &Signal,
    lambda: f64,
    iterations: u64,
) -> Result<String> {
    let mut sim = HwSimulator::from_signal(config, signal, lambda)?;
    let mut golden = LbiSolver::fixed(signal, lambda, config.word_format)?;
    for i in 1..=iterations {
        let record = sim.run_iteration()?;
        golden.step();
        let golden_beta: Vec<i64> = golden.state().beta().iter().map(|b| b.raw()).collect();
        let sim_beta = sim.beta_raw();
        if sim_beta != golden_beta {
            let lane = sim_beta
                .iter()
                .zip(&golden_beta)
                .position(|(a, b)| a != b)
                .unwrap_or(0);
            return Ok(format!(
                "first divergence at iteration {i} (k = {}): beta[{}] simulator raw {} vs \
                 golden raw {}",
                record.k,
                lane + 1,
                sim_beta[lane],
                golden_beta[lane]
            ));
        }
    }
    Ok("divergence not reproduced on replay".to_string())
}

pub fn run(args: SimulateArgs, defaults: &Defaults) -> CliResult {
    let prepared = (|| -> Result<_> {
        let lambda = defaults.lambda(args.lambda)?;
        let format = defaults.format(args.format.as_deref())?;
        let raw = load_signal(&args)?;
        let signal = super::detect::prepare_signal(raw, args.no_scale)?;
        let iterations = args.iterations.unwrap_or_else(|| {
            defaults.iterations_per_sample(args.iterations_per_sample) * signal.n() as u64
        });
        anyhow::ensure!(iterations >= 1, "iteration budget must be at least 1");
        Ok((lambda, format, signal, iterations))
    })()
    .map_err(CliError::input)?;
    let (lambda, format, signal, iterations) = prepared;

    let hw_config = HwConfig::new(args.banks)
        .with_word_format(format)
        .with_f_overhead(args.f_overhead)
        .with_cordic_depth(args.cordic_depth);

    let outcome = (|| -> Result<_> {
        let mut sim = HwSimulator::from_signal(hw_config, &signal, lambda)?;
        let trace = sim.run(iterations)?;
        let mut golden = LbiSolver::fixed(&signal, lambda, format)?;
        golden.run(iterations);
        Ok((sim, trace, golden))
    })()
    .map_err(CliError::input)?;
    let (sim, trace, golden) = outcome;

    let golden_beta: Vec<i64> = golden.state().beta().iter().map(|b| b.raw()).collect();
    let golden_v: Vec<i64> = golden.state().v().iter().map(|v| v.raw()).collect();
    if sim.beta_raw() != golden_beta || sim.v_raw() != golden_v {
        let dump = diagnose_divergence(hw_config, &signal, lambda, iterations)
            .unwrap_or_else(|e| format!("replay failed: {e}"));
        return Err(CliError::internal(anyhow!(
            "simulator does not match the golden fixed-point solver; {dump}"
        )));
    }

    (|| -> Result<()> {
        let out_dir = defaults.output_dir(args.output_dir.as_deref());
        let predicted =
            cycle::estimate_cycles(signal.n() as u64, args.banks as u64, iterations, args.f_overhead)?
                .total_cycles;

        // Bit-equality held, so the golden run doubles as the result source.
        let solution = Solution::Fixed(golden);
        let report = BreakReport::from_solution(&solution, &signal, lambda, 0.0, args.ols)?;
        let report_path = out_dir.join("report.json");
        io::write_json(&report_path, &report)?;

        let mut cycles_csv = String::from("iteration,k,t_hat,c_read,c_store,c_total\n");
        for r in &trace.per_iteration {
            cycles_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration, r.k, r.t_hat, r.c_read, r.c_store, r.c_total
            ));
        }
        let cycles_path = out_dir.join("cycles.csv");
        io::write_text(&cycles_path, &cycles_csv)?;

        let vectors_path = out_dir.join("vectors.json");
        io::write_json(
            &vectors_path,
            &GoldenVectors {
                format: format.to_string(),
                beta_raw: golden_beta,
                v_raw: golden_v,
            },
        )?;

        let summary = SimulationSummary {
            n: signal.n(),
            banks: args.banks,
            iterations,
            format: format.to_string(),
            lambda,
            simulated_cycles: trace.total_cycles,
            predicted_cycles: predicted,
            cycles_match: trace.total_cycles == predicted,
            bit_exact: true,
            saturation_events: sim.saturation_events(),
        };
        let summary_path = out_dir.join("summary.json");
        io::write_json(&summary_path, &summary)?;

        let mut manifest = RunManifest::new(
            "simulate-hw",
            json!({
                "input": args.input.as_ref().map(|p| p.display().to_string()),
                "gen_n": args.gen_n,
                "gen_breaks": args.gen_breaks,
                "noise_sigma": args.noise_sigma,
                "banks": args.banks,
                "iterations": iterations,
                "lambda": lambda,
                "format": format.to_string(),
                "f_overhead": args.f_overhead,
                "cordic_depth": args.cordic_depth,
                "scaled": !args.no_scale,
                "ols": args.ols,
            }),
            Some(args.seed),
        );
        if let Some(input) = &args.input {
            manifest.record_input(input)?;
        }
        for path in [&report_path, &cycles_path, &vectors_path, &summary_path] {
            manifest.record_output(path)?;
        }
        manifest.write(&out_dir.join("manifest.json"))?;

        println!(
            "bit-exact over {iterations} iterations; simulated {} cycles, predicted {} ({}); \
             lambda word {}",
            trace.total_cycles,
            predicted,
            if trace.total_cycles == predicted {
                "match"
            } else {
                "MISMATCH"
            },
            FixedScalar::quantize(lambda, format).raw(),
        );
        Ok(())
    })()
    .map_err(CliError::input)
}
