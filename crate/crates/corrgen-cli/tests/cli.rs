//! End-to-end tests of the corrgen binary: spawn the real executable,
//! exercise the documented commands, and check outputs, determinism, and
//! exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use corrgen::linalg::{mat_log_spd, SymMatrix};
use serde_json::Value;

fn corrgen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrgen"))
}

fn run(args: &[&str]) -> Output {
    corrgen().args(args).output().expect("spawn corrgen")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn jsonl(out: &Output) -> Vec<Value> {
    stdout(out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid JSON line"))
        .collect()
}

/// Blank-line separated blocks of comma-separated rows.
fn parse_csv(text: &str) -> Vec<Vec<Vec<f64>>> {
    text.split("\n\n")
        .map(|b| b.trim())
        .filter(|b| !b.is_empty())
        .map(|block| {
            block
                .lines()
                .map(|line| {
                    line.split(',')
                        .map(|f| f.trim().parse::<f64>().expect("csv float"))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).expect("write temp file");
}

#[test]
fn generate_is_reproducible_and_seed_sensitive() {
    let args = [
        "generate", "--method", "gamma-gaussian", "--dim", "3", "--count", "2", "--seed", "7",
    ];
    let first = stdout(&run_ok(&args));
    let second = stdout(&run_ok(&args));
    assert_eq!(first, second, "same seed must give identical output");
    assert_eq!(first.lines().count(), 2);

    let other = stdout(&run_ok(&[
        "generate", "--method", "gamma-gaussian", "--dim", "3", "--count", "2", "--seed", "8",
    ]));
    assert_ne!(first, other, "different seed must change output");

    for record in jsonl(&run_ok(&args)) {
        assert_eq!(record["n"], 3);
        assert_eq!(record["vecl"].as_array().unwrap().len(), 3);
        assert_eq!(record["gamma"].as_array().unwrap().len(), 3);
        assert!(record["lambda_min"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn transform_round_trips_generated_matrices() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mats = dir.path().join("mats.csv");
    let gammas = dir.path().join("gammas.csv");
    let back = dir.path().join("back.csv");

    run_ok(&[
        "generate", "--method", "gamma-gaussian", "--dim", "4", "--count", "3", "--seed", "11",
        "--format", "csv", "--output", mats.to_str().unwrap(),
    ]);
    run_ok(&[
        "transform", "--to-gamma",
        "--input", mats.to_str().unwrap(),
        "--output", gammas.to_str().unwrap(),
    ]);
    run_ok(&[
        "transform", "--to-corr",
        "--input", gammas.to_str().unwrap(),
        "--output", back.to_str().unwrap(),
    ]);

    let original = parse_csv(&fs::read_to_string(&mats).unwrap());
    let recovered = parse_csv(&fs::read_to_string(&back).unwrap());
    assert_eq!(original.len(), 3);
    assert_eq!(recovered.len(), 3);
    for (a, b) in original.iter().zip(&recovered) {
        assert!(max_abs_diff(a, b) <= 1e-8, "round trip drift {}", max_abs_diff(a, b));
    }
}

#[test]
fn transform_identity_gives_zero_vector() {
    let dir = tempfile::tempdir().expect("tempdir");
    let input = dir.path().join("identity.csv");
    write(&input, "1,0,0\n0,1,0\n0,0,1\n");
    let out = run_ok(&["transform", "--to-gamma", "--input", input.to_str().unwrap()]);
    let values: Vec<f64> = stdout(&out)
        .trim()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    assert!(values.iter().all(|v| v.abs() <= 1e-12), "got {values:?}");
}

#[test]
fn transform_requires_exactly_one_direction() {
    let dir = tempfile::tempdir().expect("tempdir");
    let input = dir.path().join("identity.csv");
    write(&input, "1,0\n0,1\n");
    let path = input.to_str().unwrap();
    let both = run(&["transform", "--to-gamma", "--to-corr", "--input", path]);
    assert_eq!(exit_code(&both), 1);
    let neither = run(&["transform", "--input", path]);
    assert_eq!(exit_code(&neither), 1);
}

#[test]
fn jacobian_reports_golden_values() {
    let out = run_ok(&["jacobian", "--gamma", "0.25,0.25,0.25"]);
    let records = jsonl(&out);
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r["n"], 3);
    // Three-decimal reference values from an independent high-precision
    // evaluation of this Jacobian.
    let psi = r["psi"].as_f64().unwrap();
    assert!((psi - 1.3285147279628107).abs() < 1e-9, "psi {psi}");
    let j = r["j"].as_array().unwrap();
    for (a, row) in j.iter().enumerate() {
        for (b, v) in row.as_array().unwrap().iter().enumerate() {
            let expected = if a == b { 0.920 } else { 0.102 };
            assert!((v.as_f64().unwrap() - expected).abs() < 1e-3);
        }
    }
}

#[test]
fn density_equals_psi_times_coordinate_density() {
    let dir = tempfile::tempdir().expect("tempdir");
    let law = dir.path().join("law.json");
    let input = dir.path().join("mats.csv");
    write(&law, r#"{"family":"gaussian_iid","mean":0.0,"omega2":1.0}"#);
    write(&input, "1,0\n0,1\n\n1,0.3\n0.3,1\n");
    let out = run_ok(&[
        "density",
        "--law-file", law.to_str().unwrap(),
        "--input", input.to_str().unwrap(),
    ]);
    let records = jsonl(&out);
    assert_eq!(records.len(), 2);
    for r in &records {
        let f = r["f_gamma"].as_f64().unwrap();
        let psi = r["psi"].as_f64().unwrap();
        let density = r["density"].as_f64().unwrap();
        assert!(psi > 0.0 && density > 0.0);
        assert!((density - f * psi).abs() <= 1e-12 * density.max(1.0));
    }
    // At the identity, the coordinate is zero: the density is the Gaussian
    // mode and the 2x2 change of variables is the identity.
    let first = &records[0];
    let mode = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((first["f_gamma"].as_f64().unwrap() - mode).abs() < 1e-12);
    assert!((first["psi"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn verify_roundtrip_suite_passes() {
    let out = run_ok(&[
        "verify", "--suite", "roundtrip", "--dim", "3", "--draws", "50", "--seed", "1",
    ]);
    let records = jsonl(&out);
    assert!(!records.is_empty());
    for r in &records {
        assert_eq!(r["N"], 50);
        assert_eq!(r["seed"], 1);
        assert_eq!(r["pass"], true);
    }
    assert!(stderr(&out).contains("checks passed"));
}

#[test]
fn verify_unknown_suite_lists_names() {
    let out = run(&["verify", "--suite", "nope", "--seed", "1"]);
    assert_eq!(exit_code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("roundtrip") && err.contains("pac-identities"), "stderr: {err}");
}

#[test]
fn unknown_method_exits_1_and_lists_methods() {
    let out = run(&["generate", "--method", "bogus", "--dim", "3", "--seed", "1"]);
    assert_eq!(exit_code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("equicorrelation") && err.contains("wishart"), "stderr: {err}");
}

#[test]
fn missing_seed_exits_1_and_missing_input_exits_3() {
    let out = run(&["generate", "--method", "naive", "--dim", "3"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--seed"));

    let out = run(&["transform", "--to-gamma", "--input", "/nonexistent/mats.csv"]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr(&out).contains("/nonexistent/mats.csv"));
}

#[test]
fn block_spec_file_output_matches_log_pattern() {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = dir.path().join("spec.json");
    write(&spec, r#"{"sizes":[2,3],"gammas":[[0.3,0.1],[0.1,0.2]]}"#);
    // Deterministic: a fixed spec needs no seed.
    let out = run_ok(&[
        "generate", "--method", "block",
        "--spec-file", spec.to_str().unwrap(),
        "--format", "csv",
    ]);
    let mats = parse_csv(&stdout(&out));
    assert_eq!(mats.len(), 1);
    let c = SymMatrix::from_rows(&mats[0]).expect("symmetric output");
    let g = mat_log_spd(&c).expect("log of SPD output");
    let gamma = |i: usize, j: usize| match (i < 2, j < 2) {
        (true, true) => 0.3,
        (false, false) => 0.2,
        _ => 0.1,
    };
    for i in 0..5 {
        for j in 0..i {
            assert!(
                (g.get(i, j) - gamma(i, j)).abs() <= 1e-8,
                "log pattern broken at ({i}, {j}): {}",
                g.get(i, j)
            );
        }
    }
}

#[test]
fn bench_cross_checks_dense_route() {
    let dir = tempfile::tempdir().expect("tempdir");
    let report = dir.path().join("bench.jsonl");
    let out = run_ok(&[
        "bench", "--dim", "30", "--blocks", "3", "--seed", "2",
        "--dense-max", "60", "--output", report.to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("speedup"));
    let record: Value =
        serde_json::from_str(fs::read_to_string(&report).unwrap().trim()).unwrap();
    assert_eq!(record["n"], 30);
    assert_eq!(record["k"], 3);
    assert!(record["max_abs_diff"].as_f64().unwrap() <= 1e-8);
    assert!(record["speedup"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("config.json");
    write(
        &config,
        r#"{"method":"gamma-gaussian","dim":3,"count":2,"seed":5}"#,
    );
    let path = config.to_str().unwrap();

    let defaults = stdout(&run_ok(&["generate", "--config", path]));
    assert_eq!(defaults.lines().count(), 2, "count from config");

    let overridden = stdout(&run_ok(&["generate", "--config", path, "--count", "1"]));
    assert_eq!(overridden.lines().count(), 1, "flag overrides config");
    assert_eq!(defaults.lines().next(), overridden.lines().next());

    let reseeded = stdout(&run_ok(&["generate", "--config", path, "--seed", "99"]));
    assert_ne!(defaults, reseeded, "seed flag overrides config seed");

    let bad = dir.path().join("bad.json");
    write(&bad, r#"{"methd":"naive"}"#);
    let out = run(&["generate", "--config", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1, "unknown config keys are rejected");
}

#[test]
fn eigen_method_honors_fixed_spectrum() {
    let out = run_ok(&[
        "generate", "--method", "eigen", "--dim", "4",
        "--eigenvalues", "2.0,1.0,0.6,0.4", "--count", "3", "--seed", "13",
    ]);
    for r in jsonl(&out) {
        let lm = r["lambda_min"].as_f64().unwrap();
        assert!((lm - 0.4).abs() <= 1e-9, "lambda_min {lm}");
    }
}

#[test]
fn every_sampling_method_produces_valid_output() {
    let dir = tempfile::tempdir().expect("tempdir");
    let law = dir.path().join("law.json");
    write(&law, r#"{"variant":"gaussian_iid","mu":0.1,"omega2":0.5}"#);
    let law_arg = law.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--method", "equicorrelation", "--dim", "4", "--alpha", "3", "--beta", "2"],
        vec!["--method", "gamma-law", "--dim", "3", "--law-file", law_arg],
        vec!["--method", "block", "--sizes", "2,3", "--omega", "1.5"],
        vec!["--method", "mixture", "--sizes", "2,2", "--m", "2"],
        vec!["--method", "naive", "--dim", "3"],
        vec!["--method", "gram", "--dim", "4"],
        vec!["--method", "sap", "--dim", "4", "--alpha", "3"],
        vec!["--method", "sap", "--dim", "3", "--angle-law", "uniform"],
        vec!["--method", "eigen", "--dim", "5"],
        vec!["--method", "pac", "--dim", "4", "--alpha", "2"],
        vec!["--method", "wishart", "--dim", "3", "--t", "50"],
    ];
    for case in cases {
        let mut args = vec!["generate", "--count", "2", "--seed", "21"];
        args.extend(&case);
        let out = run_ok(&args);
        let records = jsonl(&out);
        assert_eq!(records.len(), 2, "case {case:?}");
        for r in records {
            assert!(
                r["lambda_min"].as_f64().unwrap() > 0.0,
                "case {case:?} produced a non-PD matrix"
            );
        }
    }
}

#[test]
fn thread_cap_env_is_validated() {
    let ok = corrgen()
        .env("CORRGEN_THREADS", "2")
        .args(["generate", "--method", "gram", "--dim", "3", "--count", "4", "--seed", "3"])
        .output()
        .expect("spawn corrgen");
    assert!(ok.status.success());
    assert_eq!(stdout(&ok).lines().count(), 4);

    let bad = corrgen()
        .env("CORRGEN_THREADS", "many")
        .args(["generate", "--method", "gram", "--dim", "3", "--seed", "3"])
        .output()
        .expect("spawn corrgen");
    assert_eq!(exit_code(&bad), 1);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);
    assert_eq!(exit_code(&run(&["generate", "--help"])), 0);
    // A bare unknown subcommand is a usage error.
    assert_eq!(exit_code(&run(&["frobnicate"])), 1);
}
