use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tvtrend"));
    c.env_remove("TVTREND_THREADS");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn write_signal(dir: &PathBuf, values: &[f64]) -> PathBuf {
    let p = dir.join("y.csv");
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&p, text).unwrap();
    p
}

fn read_values(bytes: &[u8]) -> Vec<f64> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

fn wiggly(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            (if x < 0.4 { 0.0 } else { 2.0 }) + (7.3 * i as f64).sin() * 0.8
        })
        .collect()
}

#[test]
fn zero_lambda_returns_the_input() {
    let dir = scratch("zero");
    let y = wiggly(30);
    let input = write_signal(&dir, &y);
    let o = run(bin().args(["solve", "--k", "2", "--lambda", "0", "--input"]).arg(&input));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_values(&o.stdout), y);
}

#[test]
fn huge_lambda_returns_the_least_squares_line() {
    let dir = scratch("huge");
    let y = wiggly(40);
    let input = write_signal(&dir, &y);
    let o = run(bin().args(["solve", "--k", "2", "--lambda", "1e6", "--input"]).arg(&input));
    assert_eq!(code(&o), 0);
    let f = read_values(&o.stdout);
    // simple linear regression on i
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
    let sxx: f64 = (0..y.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    let b = sxy / sxx;
    for (i, fi) in f.iter().enumerate() {
        assert!((fi - (my + b * (i as f64 - mx))).abs() < 1e-9);
    }
}

#[test]
fn dp_and_admm_agree_for_k1() {
    let dir = scratch("dp");
    let input = write_signal(&dir, &wiggly(120));
    let mut outs = Vec::new();
    for alg in ["admm", "dp_k1"] {
        let o = run(bin()
            .args(["solve", "--k", "1", "--lambda", "0.05", "--algorithm", alg, "--input"])
            .arg(&input));
        assert_eq!(code(&o), 0);
        outs.push(read_values(&o.stdout));
    }
    let err = outs[0].iter().zip(&outs[1]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-9, "{err}");
}

#[test]
fn json_report_and_lambda_rule() {
    let dir = scratch("json");
    let input = write_signal(&dir, &wiggly(64));
    let o = run(bin()
        .args(["solve", "--k", "1", "--lambda-rule", "corollary", "--s", "1", "--format", "json", "--input"])
        .arg(&input));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = 64f64;
    let want = (0.5f64).sqrt() * (n.ln() / n).sqrt();
    assert!((v["lambda"].as_f64().unwrap() - want).abs() < 1e-15);
    assert_eq!(v["f_hat"].as_array().unwrap().len(), 64);
    assert_eq!(v["converged"], Value::Bool(true));
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = scratch("malformed");
    let p = dir.join("bad.csv");
    std::fs::write(&p, "y\n1.0\n2.0\noops\n").unwrap();
    let o = run(bin().args(["solve", "--k", "1", "--lambda", "0.1", "--input"]).arg(&p));
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:4:"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let o = run(bin().args(["verify", "--suite", ""]));
    assert_eq!(code(&o), 2);
    let o = run(bin().args(["solve", "--k", "1", "--input", "/nonexistent/y.csv", "--lambda", "1"]));
    assert_eq!(code(&o), 2);
    let dir = scratch("usage");
    let input = write_signal(&dir, &[1.0, 2.0, 3.0]);
    let o = run(bin().args(["solve", "--k", "1", "--input"]).arg(&input));
    assert_eq!(code(&o), 2);
}

#[test]
fn non_convergence_exits_three() {
    let dir = scratch("nonconv");
    let input = write_signal(&dir, &wiggly(200));
    let out = dir.join("f.csv");
    let o = run(bin()
        .args(["solve", "--k", "3", "--lambda", "0.001", "--max-iter", "1", "--algorithm", "synthesis_cd", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}

#[test]
fn verify_suites_pass() {
    for suite in ["norms", "lemma35", "lemma36"] {
        let o = run(bin().args(["verify", "--suite", suite]));
        assert_eq!(code(&o), 0, "{suite}");
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["passed"], Value::Bool(true));
        assert_eq!(v["suite"], Value::String(suite.into()));
    }
}

#[test]
fn bounds_report_matches_the_formula() {
    let o = run(bin().args([
        "bounds", "--k", "1", "--n", "100", "--knots", "34,67", "--signs", "1,-1",
        "--lambda-rule", "theorem",
    ]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    assert_eq!(lambda, v["threshold_strengthened"].as_f64().unwrap());
    let g = v["gamma_sq"].as_f64().unwrap();
    let u = 20f64.ln();
    let root = (3.0 / 100f64).sqrt() + (2.0 * u / 100.0).sqrt() + lambda * g.sqrt();
    let total = v["adaptive"]["total"].as_f64().unwrap();
    assert!((total - root * root).abs() < 1e-12 * total);
    assert!((v["n_max_cap"].as_f64().unwrap() - 34.0).abs() < 1e-9);
}

#[test]
fn interpolant_output() {
    let o = run(bin().args([
        "interpolant", "--k", "1", "--n", "17", "--knots", "9", "--signs", "1",
        "--mode", "noiseless", "--format", "csv",
    ]));
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,q,cap");
    assert_eq!(lines.len(), 17);
    assert!(lines.contains(&"9,1,1"));
    let o = run(bin().args(["interpolant", "--k", "2", "--n", "60", "--knots", "20,40"]));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], Value::Bool(true));
    assert_eq!(v["interpolates"], Value::Bool(true));
}

#[test]
fn simulate_dry_run_and_schema_checks() {
    let o = run(bin().args(["simulate", "--dry-run", "--config"]).arg(shipped("k1_coverage.json")));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["knots"], serde_json::json!([86, 172]));
    let dir = scratch("schema");
    let text = std::fs::read_to_string(shipped("k1_coverage.json"))
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 7");
    let p = dir.join("v7.json");
    std::fs::write(&p, text).unwrap();
    let o = run(bin().args(["simulate", "--config"]).arg(&p));
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_is_byte_identical_across_thread_counts() {
    let dir = scratch("repro");
    let cfg = shipped("k2_coverage.json");
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.join(format!("t{i}.csv"));
        let summary = dir.join(format!("s{i}.json"));
        let o = run(bin()
            .env("TVTREND_THREADS", threads)
            .args(["simulate", "--seed", "5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("--summary")
            .arg(&summary));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push((std::fs::read(&out).unwrap(), std::fs::read(&summary).unwrap()));
    }
    assert!(csvs.windows(2).all(|w| w[0] == w[1]));
    let lines = String::from_utf8(csvs[0].0.clone()).unwrap();
    assert_eq!(lines.lines().count(), 501);
}

#[test]
fn invalid_thread_cap_is_a_usage_error() {
    let o = run(bin()
        .env("TVTREND_THREADS", "zero")
        .args(["simulate", "--config"])
        .arg(shipped("k1_coverage.json")));
    assert_eq!(code(&o), 2);
}
