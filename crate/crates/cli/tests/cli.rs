use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ldgate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldgate")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    fs::write(&p, text).unwrap();
    p
}

/// Data rows of a results.csv, skipping the provenance and header lines.
fn csv_rows(dir: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(dir.join("results.csv"))
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn regression_config_solves_gate() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = configs().join("gate_regression.toml");
    let res = ldgate(&["solve-gate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    let sol = &s["results"]["solution"];
    assert!((sol["omega_tau"].as_f64().unwrap() - 56.3186).abs() < 1e-3);
    assert!((sol["eta1"].as_f64().unwrap() - 2.18403).abs() < 1e-3);
    assert!((sol["eta2"].as_f64().unwrap() - 1.73205).abs() < 1e-3);
    let duration = sol["physical"]["duration"].as_f64().unwrap();
    assert!((duration - 3.98e-5).abs() < 1e-7);
    assert!(out.join("results.csv").exists());
    assert!(out.join("plots/robustness.svg").exists());
}

#[test]
fn sweep_reproduces_robustness_numbers() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("robustness_sweep.toml");
    let res = ldgate(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "sweep"], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&tmp.path().join("sweep"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 56.0);
    assert!((rows[0][1] - 0.9936).abs() < 5e-4);
    assert!((rows[1][1] - 0.99998).abs() < 5e-4);
    let header = fs::read_to_string(tmp.path().join("sweep/results.csv")).unwrap();
    assert!(header.starts_with("# config_hash="));
}

#[test]
fn empty_grid_is_rejected_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "mode = \"sweep\"\n[sweep]\nvalues = []\n");
    let res = ldgate(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "nothing"], tmp.path());
    assert_eq!(code(&res), 2);
    assert!(!tmp.path().join("nothing").exists());
}

#[test]
fn mode_mismatch_and_bad_keys_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("robustness_sweep.toml");
    let res = ldgate(&["solve-gate", "--config", cfg.to_str().unwrap(), "--out", "x"], tmp.path());
    assert_eq!(code(&res), 2);
    let bad = write_config(tmp.path(), "[gate]\nnot_a_key = 3\n");
    assert_eq!(code(&ldgate(&["solve-gate", "--config", bad.to_str().unwrap(), "--out", "x"], tmp.path())), 2);
    let both = write_config(tmp.path(), "[physical]\nrabi_hz = 1e5\ntrap_hz = 1e7\n[dimensionless]\nomega_over_nu = 0.01\n");
    assert_eq!(code(&ldgate(&["solve-gate", "--config", both.to_str().unwrap(), "--out", "x"], tmp.path())), 2);
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn runs_are_deterministic_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("entangle_epr.toml");
    let cfg = cfg.to_str().unwrap();
    let read = |jobs: &str| {
        let res = ldgate(&["entangle", "--config", cfg, "--out", "det", "--jobs", jobs], tmp.path());
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        let d = tmp.path().join("det");
        let csv = fs::read(d.join("results.csv")).unwrap();
        let mut s = summary(&d);
        s["config"]["run"]["jobs"] = Value::Null;
        (csv, s, fs::read(d.join("plots/concurrence.svg")).unwrap())
    };
    let a = read("1");
    let b = read("1");
    let c = read("3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let epr = &a.1["results"]["epr"];
    assert_eq!(epr["state"], "psi-minus");
    assert!((epr["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn summary_round_trips_as_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("gate_regression.toml");
    let res = ldgate(&["solve-gate", "--config", cfg.to_str().unwrap(), "--out", "first", "--seed-eta1", "2.25"], tmp.path());
    assert_eq!(code(&res), 0);
    let first = summary(&tmp.path().join("first"));
    let again = tmp.path().join("first/summary.json");
    let res = ldgate(&["solve-gate", "--config", again.to_str().unwrap(), "--out", "second"], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let second = summary(&tmp.path().join("second"));
    assert_eq!(first["config_hash"], second["config_hash"]);
    assert_eq!(second["config"]["gate"]["seed_eta1"], 2.25);
    for key in ["eta1", "eta2", "omega_tau"] {
        let a = first["results"]["solution"][key].as_f64().unwrap();
        let b = second["results"]["solution"][key].as_f64().unwrap();
        assert!((a - b).abs() < 1e-8, "{key}");
    }
}

#[test]
fn non_convergence_exits_3_with_partial_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[solver]\nmax_iterations = 1\n");
    let res = ldgate(&["solve-gate", "--config", cfg.to_str().unwrap(), "--out", "nc", "--seed-eta1", "3.5", "--seed-eta2", "0.4"], tmp.path());
    assert_eq!(code(&res), 3);
    let s = summary(&tmp.path().join("nc"));
    assert_eq!(s["status"], "non-convergence");
    assert!(s["error"].as_str().unwrap().contains("converge") || s["error"].as_str().unwrap().contains("residual"));
}

#[test]
fn bus_left_entangled_is_an_oracle_failure() {
    // the printed third condition at a negative branch sign does not return the bus
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "mode = \"entangle\"\n[gate]\ncondition = \"printed\"\n");
    let res = ldgate(&["entangle", "--config", cfg.to_str().unwrap(), "--out", "bus"], tmp.path());
    assert_eq!(code(&res), 4);
    let s = summary(&tmp.path().join("bus"));
    assert_eq!(s["status"], "oracle-failure");
    assert!(s["results"]["solution"]["omega_tau"].is_f64());
}

#[test]
fn evolve_against_effective_oracle() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "mode = \"evolve\"\n[evolve]\nt_final = 20.0\nsteps = 5\noracle = \"effective\"\n\
         initial = [{ m = 0, s1 = \"e\", s2 = \"g\" }, { m = 0, s1 = \"g\", s2 = \"g\", im = 1.0 }]\n\
         [pulses]\nomega1 = 1.0\nomega2 = 1.0\neta1 = 0.8\neta2 = 0.4\nphi1 = 0.3\nphi2 = 0.0\nk1 = 1\n",
    );
    let res = ldgate(&["evolve", "--config", cfg.to_str().unwrap(), "--out", "ev"], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&tmp.path().join("ev"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!((r[1..5].iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(r[5] < 1e-6);
    }
    assert!(tmp.path().join("ev/plots/populations.svg").exists());
}

#[test]
fn rwa_curve_is_monotonic() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("rwa_validation.toml");
    let res = ldgate(&["validate-rwa", "--config", cfg.to_str().unwrap(), "--out", "rwa"], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&tmp.path().join("rwa"));
    assert_eq!(s["results"]["monotonic"], true);
    let rows = csv_rows(&tmp.path().join("rwa"));
    assert!(rows.last().unwrap()[1] > 1e-3);
}

#[test]
fn scan_lists_regression_solution() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "mode = \"scan-integers\"\n[scan]\nk1_values = [1]\np_max = 2\nq_max = 3\n");
    let res = ldgate(&["scan-integers", "--config", cfg.to_str().unwrap(), "--out", "scan"], tmp.path());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let rows = csv_rows(&tmp.path().join("scan"));
    assert!(rows.iter().any(|r| r[1..4] == [1.0, 2.0, 1.0] && (r[6] - 56.3186).abs() < 1e-3));
    assert!(rows.windows(2).all(|w| w[0][6] <= w[1][6]));
}
