//! End-to-end runs of the `comonotone` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comonotone"))
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn approx_reports_the_best_constant() {
    let out = run(&["approx", "--model", "cos", "--n", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["comonotone"], false);
}

#[test]
fn approx_comonotone_writes_the_polynomial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let out = run(&[
        "approx",
        "--model",
        "corpus:s=1",
        "--n",
        "4",
        "--comonotone",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["comonotone"], true);
    assert_eq!(json(&path), report["polynomial"]);
}

#[test]
fn ratio_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = run(&[
        "ratio",
        "--model",
        "corpus:s=1",
        "--r",
        "1",
        "--k",
        "2",
        "--ns",
        "8,16,32",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,E_estimate,omega,ratio,regime,expected,observed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",plus,bounded")));
}

#[test]
fn table_with_a_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "seed = 5\nns = [8, 16, 32]\nr_max = 1\nk_max = 2\n").unwrap();
    let csv = dir.path().join("t.csv");
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "table",
        "--s",
        "1",
        "--nmax",
        "16",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 4 cells, 2 values of n each
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 9);
    let summary = json(&csv.with_extension("json"));
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    assert!(summary["constants"].is_object());
}

#[test]
fn counterexample_t2_7() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = run(&[
        "counterexample",
        "--theorem",
        "T2_7",
        "--s",
        "2",
        "--ns",
        "8,16,32",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&path);
    assert_eq!(v["growth"]["passes"], true);
    assert!(v["growth"]["exponent_fit"].as_f64().unwrap() > 0.5);
    assert_eq!(v["certificates"].as_array().unwrap().len(), 3);
}

#[test]
fn check_lemmas_passes() {
    let out = run(&["check-lemmas", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["passed"], true);
}

#[test]
fn failed_assertion_exits_one() {
    // at n <= 32 the s = 2 growth for T2_2 stays under the slope threshold
    let out = run(&["counterexample", "--theorem", "T2_2", "--s", "2", "--ns", "8,16,32"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["growth"]["passes"], false);
    assert!(v["certificates"].as_array().unwrap().iter().all(|c| c["passes"] == true));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_exits_two() {
    for args in [
        &["ratio", "--model", "corpus:s=1", "--r", "1", "--k", "2", "--ns", "8,0"][..],
        &["ratio", "--model", "corpus:s=1", "--r", "1", "--k", "2", "--ns", "8,8"][..],
        &["approx", "--model", "nonsense", "--n", "3"][..],
        &["counterexample", "--theorem", "T9", "--s", "2"][..],
        &[
            "counterexample",
            "--theorem",
            "T2_7",
            "--s",
            "2",
            "--r",
            "2",
            "--ns",
            "8,16,32",
        ][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sede = 1\n").unwrap();
    let out = run(&["--config", config.to_str().unwrap(), "check-lemmas"]);
    assert_eq!(out.status.code(), Some(2));
}
