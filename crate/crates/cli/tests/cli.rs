//! End-to-end tests driving the `cefs` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cefs")
}

/// 60-row CSV where `x0` separates the two classes and determines the label.
fn toy_csv(dir: &Path) -> PathBuf {
    let mut body = String::from("x0,x1,x2,x3,y\n");
    let mut state = 99u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as f64) / (u32::MAX as f64)
    };
    for i in 0..60 {
        let cls = i % 2;
        body.push_str(&format!(
            "{:.4},{:.4},{:.4},{},{}\n",
            cls as f64 * 8.0 + next() * 0.3,
            next(),
            next(),
            i % 3,
            cls
        ));
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn select_happy_path_writes_selection_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "select",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["result"]["selected_indices"].is_array());
    assert!(v["result"]["converged"].as_bool().unwrap());
    assert_eq!(v["manifest"]["seed"], 7);
    assert_eq!(v["manifest"]["tool"], "cefs");
    assert!(v["manifest"]["dataset_sha256"].as_str().unwrap().len() == 64);
    // The separating column must be part of the selection.
    let names: Vec<&str> = v["result"]["selected_names"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert!(names.contains(&"x0"), "{names:?}");
}

#[test]
fn select_missing_label_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&["select", "--data", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn select_unknown_label_is_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&["select", "--data", csv.to_str().unwrap(), "--label", "zzz"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label"));
}

#[test]
fn select_iteration_cap_exits_two_with_result() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    // The stopping rule cannot fire before lag + 1 iterations.
    let out = run(&[
        "select",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--max-iters",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["converged"], serde_json::Value::Bool(false));
    assert_eq!(v["result"]["iterations"], 2);
}

#[test]
fn select_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out_path = dir.path().join("sel.json");
    let out = run(&[
        "select",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(v["result"]["objective_bits"].is_number());
}

#[test]
fn data_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    toy_csv(dir.path());
    let out = Command::new(bin())
        .args(["select", "--data", "toy.csv", "--label", "y"])
        .env("CEFS_DATA_DIR", dir.path())
        .current_dir(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn benchmark_full_grid_and_report_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let json_path = dir.path().join("bench.json");
    let out = run(&[
        "benchmark",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--seed",
        "3",
        "--output",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let records = v["result"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 5 * 3);
    assert_eq!(v["result"]["mrmr_variant"], "difference");
    assert!(v["result"]["ce"]["gamma_trace"].is_array());

    let table = run(&["report", "--input", json_path.to_str().unwrap()]);
    assert_eq!(table.status.code(), Some(0));
    let text = String::from_utf8_lossy(&table.stdout).to_string();
    assert!(text.contains("method"));
    assert!(text.contains("cmim"));

    let csv_out = run(&[
        "report",
        "--input",
        json_path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let text = String::from_utf8_lossy(&csv_out.stdout).to_string();
    assert!(text.starts_with("method,classifier,cardinality,mce,delta_ir,delta_t"));
    assert_eq!(text.lines().count(), 16);
}

#[test]
fn benchmark_single_method() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "benchmark",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--methods",
        "ce",
        "--classifiers",
        "knn",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let records = v["result"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["method"], "ce");
    assert_eq!(records[0]["classifier"], "knn3");
}

#[test]
fn benchmark_unknown_method_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "benchmark",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--methods",
        "pso",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("ce, mim, cmim, mrmr, disr"), "{err}");
}

#[test]
fn sweep_range_emits_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "sweep",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--method",
        "mim",
        "--ks",
        "1..4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# manifest:"));
    assert_eq!(lines[1], "k,mce,delta_ir");
    assert_eq!(lines.len(), 2 + 4);
    assert!(lines[2].starts_with("1,"));
}

#[test]
fn sweep_single_k() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "sweep",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--method",
        "ce",
        "--ks",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_k_beyond_m_names_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = run(&[
        "sweep",
        "--data",
        csv.to_str().unwrap(),
        "--label",
        "y",
        "--method",
        "mim",
        "--ks",
        "1..9",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("m = 4"), "{err}");
}
