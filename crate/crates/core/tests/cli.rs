use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BUMP: &str = include_str!("../configs/bump.json");

fn stifflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stifflab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, t_end: f64) -> String {
    let text = BUMP
        .replace("\"n_cells\": 400", "\"n_cells\": 100")
        .replace("\"t_end\": 0.5", &format!("\"t_end\": {t_end}"));
    let path = dir.join("small.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_outputs_and_succeeds() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 0.1);
    let out = tmp.path().join("out");
    let res = stifflab(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--plots",
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for f in [
        "diagnostics.csv",
        "snapshots.csv",
        "verdict.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_status"], "pass");
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["pass"], true);
    assert_eq!(verdict["floor_activations"], 0);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.json");
    let res = stifflab(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, BUMP.replace("\"gamma\": 40.0", "\"gamma\": 0.5")).unwrap();
    let res = stifflab(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("params.gamma"));

    assert_eq!(stifflab(&["run"]).status.code(), Some(1));
    assert_eq!(stifflab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        stifflab(&["heleshaw", "--nu0", "1", "--interval", "0,1,2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(stifflab(&["--help"]).status.code(), Some(0));
}

#[test]
fn heleshaw_prints_center_value() {
    let res = stifflab(&["heleshaw", "--nu0", "1", "--interval", "0,2"]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8_lossy(&res.stdout);
    let expected = format!("{:.12}", 1.0 - 1.0 / 1.0_f64.cosh());
    assert!(text.contains(&expected), "{text}");
}

#[test]
fn overrides_reach_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 0.1);
    let out = tmp.path().join("out");
    let res = stifflab(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--gamma",
        "7",
        "--t-end",
        "0.02",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["params"]["gamma"], 7.0);
    assert_eq!(manifest["config"]["time"]["t_end"], 0.02);
}

#[test]
fn verify_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 0.1);
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let res = stifflab(&[
                "verify",
                "--config",
                &cfg,
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(
                res.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&res.stdout)
            );
            (
                fs::read(out.join("diagnostics.csv")).unwrap(),
                fs::read(out.join("verdict.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sweep_gamma_writes_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 0.05);
    let out = tmp.path().join("sweep");
    let res = stifflab(&[
        "sweep-gamma",
        "--config",
        &cfg,
        "--values",
        "5,10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(matches!(res.status.code(), Some(0 | 3)));
    assert!(out.join("sweep.csv").is_file());
    assert!(out.join("gamma_5").join("diagnostics.csv").is_file());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn compactness_failure_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 0.05);
    let out = tmp.path().join("cmp");
    let res = stifflab(&[
        "compactness",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&res.stdout);
    assert_eq!(res.status.code(), Some(3), "{text}");
    assert!(text.contains("FAIL"));
    assert!(out.join("compactness.csv").is_file());
}
