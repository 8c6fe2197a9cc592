use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdlab")).args(args).output().expect("spawn")
}

fn small_config(dir: &Path, lambda: f64) -> String {
    let cfg = serde_json::json!({
        "nx": 16, "ny": 16, "Lx": 8.0 * std::f64::consts::PI, "Ly": 8.0 * std::f64::consts::PI,
        "lambda": lambda, "delta": 1e-3, "dt": 0.05, "T": 0.5, "seed": 3,
        "init": "random", "cadence": 0.1
    });
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_string()).unwrap();
    p.display().to_string()
}

#[test]
fn kernel_scan_rows_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("scan.csv");
    let o = mhdlab(&["kernel", "scan", "--t", "0,1,10", "--kmax", "8", "--n", "16", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 19);
    assert_eq!(header[0], "t");
    assert_eq!(header[18], "envelope_8");
    assert_eq!(lines.count(), 3 * 16 * 16);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["n"], 16);
    assert!(m["end_unix"].as_f64().unwrap() >= m["start_unix"].as_f64().unwrap());
}

#[test]
fn kernel_scan_stdout_sends_manifest_to_stderr() {
    let o = mhdlab(&["kernel", "scan", "--t", "1", "--n", "4", "--out", "-"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1 + 16);
    let m: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(m["config_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn missing_times_is_usage_error() {
    assert_eq!(mhdlab(&["kernel", "scan"]).status.code(), Some(2));
}

#[test]
fn unknown_claim_lists_known_ones() {
    let o = mhdlab(&["verify", "one", "--claim", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("elem1") && err.contains("kernel:8"));
}

#[test]
fn verify_one_elem1() {
    let o = mhdlab(&["verify", "one", "--claim", "elem1", "--samples", "3000", "--seed", "5", "--out", "-"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["claim"], "elem1");
    assert_eq!(r["verdict"], "PASS");
    assert!(r["max_ratio"].as_f64().unwrap() < 20.0);
}

#[test]
fn zero_samples_rejected() {
    assert_eq!(mhdlab(&["verify", "one", "--claim", "elem1", "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn charpoly_residual_line() {
    let o = mhdlab(&["linear", "charpoly", "--n", "16"]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    let r: f64 = s.trim().strip_prefix("max_residual ").unwrap().parse().unwrap();
    assert!(r < 1e-10);
}

#[test]
fn simulate_is_deterministic() {
    let digest = |sub: &str| {
        let d = tempfile::tempdir().unwrap();
        let cfg = small_config(d.path(), 0.1);
        let out = d.path().join(sub);
        let o = mhdlab(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["seed"], 3);
        assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "trajectory.csv"));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(digest("a"), digest("b"));
}

#[test]
fn bad_lambda_names_the_field() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path(), 1.5);
    let o = mhdlab(&["simulate", "--config", &cfg, "--out", d.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}
