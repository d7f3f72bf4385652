use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ising-lab"));
    cmd.env_remove("ISING_LAB_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> (Value, Vec<Value>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut lines = stdout(out).lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).collect::<Vec<_>>();
    let header = lines.remove(0);
    (header["header"].clone(), lines)
}

fn strip_timing(mut records: Vec<Value>) -> Vec<Value> {
    for r in &mut records {
        r.as_object_mut().unwrap().remove("wall_time_s");
    }
    records
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ising-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    let _ = std::fs::remove_file(&path);
    path
}

#[test]
fn exact_nearest_neighbour_values() {
    let (header, records) = json_lines(&run(&["exact", "--w", "1", "--half-width", "1", "--sites", "0,1", "--sites=-1,1"]));
    assert_eq!(header["command"], "exact");
    let e = std::f64::consts::E;
    let z = 2.0 * (e + 1.0 / e).powi(2);
    assert!((records[0]["value"].as_f64().unwrap() - z).abs() < 1e-12 * z);
    let t = 1f64.tanh();
    assert!((records[1]["value"].as_f64().unwrap() - t).abs() < 1e-14);
    assert!((records[2]["value"].as_f64().unwrap() - t * t).abs() < 1e-14);
}

#[test]
fn exact_engines_agree() {
    let args = ["exact", "--w", "0.7,0.2,0.05", "--half-width", "4", "--sites=-3,2", "--sites", "1,1"];
    let (_, enumerated) = json_lines(&run(&[&args[..], &["--engine", "enumeration"]].concat()));
    let (_, transfer) = json_lines(&run(&[&args[..], &["--engine", "transfer_matrix"]].concat()));
    for (a, b) in enumerated.iter().zip(&transfer) {
        let (a, b) = (a["value"].as_f64().unwrap(), b["value"].as_f64().unwrap());
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }
    assert_eq!(transfer[2]["value"], 1.0);
}

#[test]
fn free_susceptibility_matches_closed_form() {
    let (_, records) = json_lines(&run(&[
        "mc", "--T", "1,3", "--samples", "40000", "--quantities", "susceptibility,fd_susceptibility,moment",
    ]));
    assert_eq!(records.len(), 6);
    for r in &records {
        let (mean, se) = (r["mean"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
        let reference = r["reference"].as_f64().unwrap();
        assert!(se > 0.0);
        assert!((mean - reference).abs() < 4.0 * se, "{r}");
    }
}

#[test]
fn scan_against_closed_form() {
    let rows = csv_rows(&run(&["susceptibility-scan", "--T", "0.5,2,4", "--samples", "40000"]));
    assert_eq!(rows.len(), 3);
    for row in rows {
        let v: Vec<f64> = row[..4].iter().map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - v[3]).abs() < 4.0 * v[2], "{row:?}");
    }
}

#[test]
fn malformed_kernel_exits_2_without_output() {
    let out_path = scratch("bad-kernel.jsonl");
    for kernel in [r#"{"family":"exponential","a":-1,"b":1}"#, "not json", r#"{"family":"gaussian"}"#] {
        let out = run(&["mc", "--kernel", kernel, "--out", out_path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        assert!(!out_path.exists());
    }
}

#[test]
fn domain_errors_exit_2_without_output() {
    let out_path = scratch("bad-horizon.csv");
    let out = run(&["susceptibility-scan", "--T", "1,-2", "--samples", "100", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
    let out = run(&["exact", "--half-width", "1", "--sites", "0,5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_config_file_exits_2() {
    let path = scratch("bad.toml");
    std::fs::write(&path, "[mc]\nhorizon = 3.0\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "mc"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn flags_override_config_file() {
    let path = scratch("layered.toml");
    std::fs::write(
        &path,
        "seed = 11\n[mc]\nhorizons = [0.5]\nsamples = 1000\nquantities = [\"partition\"]\n",
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let (header, records) = json_lines(&run(&["--config", cfg, "mc"]));
    assert_eq!(header["config"]["common"]["seed"], 11);
    assert_eq!(records[0]["T"], 0.5);
    let (_, records) = json_lines(&run(&["--config", cfg, "--seed", "12", "mc", "--T", "0.25"]));
    assert_eq!(records[0]["seed"], 12);
    assert_eq!(records[0]["T"], 0.25);
    assert_eq!(records[0]["samples"], 1000);
}

#[test]
fn reruns_are_identical() {
    let args = [
        "mc", "--kernel", r#"{"family":"exponential","a":0.05,"b":2}"#, "--T", "1", "--samples", "5000",
        "--quantities", "partition,susceptibility,moment",
    ];
    let seeded = [&args[..], &["--seed", "5"]].concat();
    let (_, first) = json_lines(&run(&seeded));
    let (_, again) = json_lines(&run(&seeded));
    let (_, sequential) = json_lines(&run(&[&seeded[..], &["--execution", "sequential"]].concat()));
    let (_, one_worker) = json_lines(&bin().args(&seeded).env("ISING_LAB_WORKERS", "1").output().unwrap());
    let first = strip_timing(first);
    assert_eq!(first, strip_timing(again));
    assert_eq!(first, strip_timing(sequential));
    assert_eq!(first, strip_timing(one_worker));
    let (_, other_seed) = json_lines(&run(&[&args[..], &["--seed", "6"]].concat()));
    assert_ne!(first, strip_timing(other_seed));
}

#[test]
fn verify_small_suite_passes() {
    let summary = scratch("summary.csv");
    let out = run(&["verify", "--instances", "10", "--no-corbound-grid", "--summary", summary.to_str().unwrap()]);
    let (header, records) = json_lines(&out);
    assert_eq!(header["command"], "verify");
    assert!(records.iter().all(|r| r["status"] != "failed"));
    let names: std::collections::BTreeSet<&str> = records.iter().map(|r| r["name"].as_str().unwrap()).collect();
    for n in ["gks_i", "gks_ii", "gks_iii", "gks_iv", "gks_v", "lemma36", "uncoupled_zero"] {
        assert!(names.contains(n), "missing {n}");
    }
    let csv = std::fs::read_to_string(&summary).unwrap();
    assert!(csv.starts_with("name,instances,min_slack,failures,hypothesis_violations"));
    assert_eq!(String::from_utf8_lossy(&out.stderr), csv);
}

#[test]
fn corbound_reports_hypothesis_violations_without_failing() {
    let (_, records) = json_lines(&run(&["corbound", "--w", "1,0.5", "--half-width", "40", "--truncation", "20"]));
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["status"], "hypothesis_violated");
    let (_, records) = json_lines(&run(&["corbound", "--w", "2,0.001", "--epsilon", "0.09", "--half-width", "300", "--truncation", "200"]));
    assert_eq!(records[0]["status"], "passed");
}

#[test]
fn continuum_study_free_chain_is_exact() {
    let rows = csv_rows(&run(&[
        "continuum-study", "--kernel", r#"{"family":"zero"}"#, "--deltas", "0.1,0.02", "--samples", "20000",
        "--times=-0.5,0.5",
    ]));
    assert_eq!(rows.len(), 3);
    for row in &rows[..2] {
        let delta: f64 = row[0].parse().unwrap();
        let expected = ((1.0 - delta) / (1.0 + delta)).powf(1.0 / delta);
        assert_eq!(row[1], "moment");
        assert!((row[2].parse::<f64>().unwrap() - expected).abs() < 1e-12);
        assert_eq!(row[3], "0");
    }
    let jump: Vec<f64> = [2, 3, 4].iter().map(|&k| rows[2][k].parse().unwrap()).collect();
    assert_eq!(rows[2][0], "0");
    // with W = 0 the control variate reproduces the closed form
    assert!((jump[0] - (-2f64).exp()).abs() < 1e-15);
    assert!((jump[2] - (-2f64).exp()).abs() < 1e-15);
}
