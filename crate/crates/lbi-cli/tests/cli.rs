//! End-to-end tests of the `lbi` binary: exit codes, determinism, and the
//! wire formats of each command.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lbi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lbi"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn lbi");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_step_signal(path: &Path) {
    // Noiseless unit step at index 5 of 10 samples.
    let mut text = String::new();
    for i in 1..=10 {
        text.push_str(if i < 5 { "0\n" } else { "1\n" });
    }
    fs::write(path, text).unwrap();
}

#[test]
fn detect_noiseless_step() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.csv");
    write_step_signal(&input);

    // Exact-nonzero support keeps the one-ulp boundary residue next to the
    // break; the break itself must be present with an exact refit magnitude.
    let report_path = dir.path().join("report.json");
    run_ok(lbi()
        .arg("detect")
        .args(["--lambda", "1.0", "--iterations-per-sample", "650", "--ols"])
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&report_path));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let support = report["support"].as_array().unwrap();
    let slot = support
        .iter()
        .position(|v| v == &serde_json::json!(5))
        .expect("break at 5 in support");
    let magnitude = report["magnitudes"][slot].as_f64().unwrap();
    assert!((magnitude - 1.0).abs() < 1e-9, "magnitude {magnitude}");
    assert_eq!(report["scale_factor"], serde_json::json!(1.0));
    assert_eq!(report["domain"], serde_json::json!("double"));
    assert_eq!(report["saturation_events"], serde_json::json!(0));
    assert!(report_path.with_extension("manifest.json").exists());

    // The relative threshold drops the residue entirely.
    let clean_path = dir.path().join("clean.json");
    run_ok(lbi()
        .arg("detect")
        .args(["--lambda", "1.0", "--relative-threshold", "0.01", "--ols"])
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&clean_path));
    let clean: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&clean_path).unwrap()).unwrap();
    assert_eq!(clean["support"], serde_json::json!([5]));
    let magnitude = clean["magnitudes"][0].as_f64().unwrap();
    assert!((magnitude - 1.0).abs() < 1e-9, "magnitude {magnitude}");
}

#[test]
fn detect_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.csv");
    write_step_signal(&input);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        run_ok(lbi()
            .arg("detect")
            .args(["--lambda", "0.5", "--domain", "fixed:s4.16"])
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(out));
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn detect_rejects_bad_inputs_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    // Unreadable file.
    let out = lbi()
        .arg("detect")
        .args(["--lambda", "1.0", "--input"])
        .arg(dir.path().join("missing.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // All-zero input with scaling enabled.
    let zeros = dir.path().join("zeros.csv");
    fs::write(&zeros, "0\n0\n0\n").unwrap();
    let out = lbi()
        .arg("detect")
        .args(["--lambda", "1.0"])
        .arg("--input")
        .arg(&zeros)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scaling"));

    // Lambda is mandatory.
    let step = dir.path().join("step.csv");
    write_step_signal(&step);
    let out = lbi().arg("detect").arg("--input").arg(&step).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));

    // Malformed sample line.
    let junk = dir.path().join("junk.csv");
    fs::write(&junk, "1.0\nnot-a-number\n").unwrap();
    let out = lbi()
        .arg("detect")
        .args(["--lambda", "1.0"])
        .arg("--input")
        .arg(&junk)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detect_reads_config_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.csv");
    write_step_signal(&input);
    let config = dir.path().join("lbi.toml");
    fs::write(
        &config,
        "lambda = 1.0\niterations_per_sample = 650\ndomain = \"fixed\"\nformat = \"s4.16\"\n",
    )
    .unwrap();
    let report_path = dir.path().join("report.json");
    run_ok(lbi()
        .arg("detect")
        .arg("--config")
        .arg(&config)
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&report_path));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["domain"], serde_json::json!("fixed:s4.16"));
}

#[test]
fn simulate_hw_reports_matching_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    run_ok(lbi()
        .arg("simulate-hw")
        .args([
            "--gen-n",
            "10",
            "--gen-breaks",
            "1",
            "--banks",
            "4",
            "--iterations",
            "10",
            "--lambda",
            "1.0",
            "--seed",
            "3",
        ])
        .arg("--output-dir")
        .arg(&out_dir));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["simulated_cycles"], serde_json::json!(155));
    assert_eq!(summary["predicted_cycles"], serde_json::json!(155));
    assert_eq!(summary["match"], serde_json::json!(true));
    assert_eq!(summary["bit_exact"], serde_json::json!(true));

    let cycles = fs::read_to_string(out_dir.join("cycles.csv")).unwrap();
    let mut lines = cycles.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,k,t_hat,c_read,c_store,c_total"
    );
    assert_eq!(lines.clone().count(), 10);
    // k = 1, M = 4: 3 * (1 + 2) + 2 = 11 total cycles.
    assert_eq!(lines.next().unwrap(), "1,1,1,5,6,11");

    let vectors: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("vectors.json")).unwrap()).unwrap();
    assert_eq!(vectors["format"], serde_json::json!("s4.16"));
    assert_eq!(vectors["beta_raw"].as_array().unwrap().len(), 10);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn gen_profile_is_deterministic_and_detectable() {
    let dir = tempfile::tempdir().unwrap();
    let prefix_a = dir.path().join("a");
    let prefix_b = dir.path().join("b");
    for prefix in [&prefix_a, &prefix_b] {
        run_ok(lbi()
            .arg("gen-profile")
            .args(["--n", "120", "--breaks", "2", "--seed", "11", "--noise-sigma", "0.01"])
            .arg("--output-prefix")
            .arg(prefix));
    }
    assert_eq!(
        fs::read(prefix_a.with_extension("signal.csv")).unwrap(),
        fs::read(prefix_b.with_extension("signal.csv")).unwrap()
    );
    assert_eq!(
        fs::read(prefix_a.with_extension("profile.json")).unwrap(),
        fs::read(prefix_b.with_extension("profile.json")).unwrap()
    );

    let profile: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(prefix_a.with_extension("profile.json")).unwrap())
            .unwrap();
    assert_eq!(profile["n"], serde_json::json!(120));
    assert_eq!(profile["breaks"].as_array().unwrap().len(), 2);

    // Too many breaks is an input error.
    let out = lbi()
        .arg("gen-profile")
        .args(["--n", "5", "--breaks", "9"])
        .arg("--output-prefix")
        .arg(dir.path().join("c"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_cycles_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    run_ok(lbi()
        .arg("sweep-cycles")
        .args(["--axis", "n", "--range", "10,15", "--banks", "4", "--iterations-per-sample", "10"])
        .arg("--output")
        .arg(&out));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,cycles,seconds");
    assert_eq!(lines.len(), 7);
    // N = 10, L = 100 at 4 banks: the validation-table value.
    assert_eq!(lines[1], "10,1361,");
    // Strictly increasing in N.
    let cycles: Vec<u64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(cycles.windows(2).all(|w| w[1] > w[0]));

    // Device preset supplies seconds for known bank counts.
    let priced = dir.path().join("priced.csv");
    run_ok(lbi()
        .arg("sweep-cycles")
        .args(["--axis", "n", "--range", "10000,10000", "--banks", "1024"])
        .args(["--iterations-per-sample", "650", "--device", "stratix-v"])
        .arg("--output")
        .arg(&priced));
    let text = fs::read_to_string(&priced).unwrap();
    let line = text.lines().nth(1).unwrap();
    let seconds: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
    assert!((seconds - 1.91).abs() <= 0.01, "got {seconds}");

    // Inverted range is an input error.
    let out = lbi()
        .arg("sweep-cycles")
        .args(["--axis", "m", "--range", "8,4", "--n", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_accuracy_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acc.csv");
    run_ok(lbi()
        .arg("experiment-accuracy")
        .args(["--n", "40", "--trials", "3", "--iterations-per-sample", "50,150"])
        .args(["--seed", "5"])
        .arg("--output")
        .arg(&out));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5); // header + 2 domains x 2 checkpoints
    assert!(lines[1].starts_with("double,50,"));
    assert!(lines[3].starts_with("fixed:s4.16,50,"));
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 7);
    }

    let out_err = lbi()
        .arg("experiment-accuracy")
        .args(["--n", "40", "--trials", "0"])
        .output()
        .unwrap();
    assert_eq!(out_err.status.code(), Some(2));
}

#[test]
fn output_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.csv");
    write_step_signal(&input);
    let out_dir = dir.path().join("from-env");
    run_ok(lbi()
        .env("LBI_OUTPUT_DIR", &out_dir)
        .current_dir(dir.path())
        .arg("detect")
        .args(["--lambda", "1.0"])
        .arg("--input")
        .arg(&input));
    assert!(out_dir.join("step.report.json").exists());
}
