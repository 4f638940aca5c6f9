use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn unitmass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unitmass")).args(args).output().expect("spawn unitmass")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn is_empty_dir(p: &Path) -> bool {
    !p.exists() || std::fs::read_dir(p).unwrap().next().is_none()
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "schema_version = 1\nname = \"x\"\ndim = 1\nradius = 1.0\nintervals = 10\ns_end = 1.0\nbogus_key = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = unitmass(&["run", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));
    assert!(is_empty_dir(&out));
}

#[test]
fn wrong_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("separable.toml")).unwrap().replace("schema_version = 1", "schema_version = 7");
    let cfg = dir.path().join("v7.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = unitmass(&["run", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(is_empty_dir(&out));
}

#[test]
fn k_zero_run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kz");
    let o = unitmass(&["run", "--config", arg(&configs().join("k_zero_synthetic.toml")), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("k_zero_synthetic: PASS"));
    for f in ["trace.csv", "tables.csv", "s_tables.csv", "predictions.csv", "report.json", "snapshots/v_s0.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let tables = std::fs::read_to_string(out.join("tables.csv")).unwrap();
    assert_eq!(tables.lines().next(), Some("t,h,g,E,L"));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("s,mass,K,sup,center,lp_"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["status"], "pass");
    assert_eq!(report["residuals"]["max_abs_e"], 0.0);
}

#[test]
fn predict_prints_law_table() {
    let o = unitmass(&["predict", "--scenario", "algebraic:n=1,gamma=4,eps=0.75", "--tmax", "1e4", "--count", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,E_pred_upper,E_pred_lower"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 1e4).abs() < 1e-6);
    assert!((last[1] - 1e4f64.ln()).abs() < 1e-9, "upper slope 1: {last:?}");
    assert!((last[2] - 0.75 * 1e4f64.ln()).abs() < 1e-9, "lower slope 0.75: {last:?}");
}

#[test]
fn predict_rejects_bad_scenario() {
    let o = unitmass(&["predict", "--scenario", "cubic:n=1", "--tmax", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_needs_two_levels() {
    let o = unitmass(&["converge", "--config", arg(&configs().join("separable.toml")), "--levels", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_writes_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = unitmass(&["converge", "--config", arg(&configs().join("separable.toml")), "--levels", "2", "--out", arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("convergence.json")).unwrap()).unwrap();
    let order = report["exact_orders"][0].as_f64().unwrap();
    assert!(order > 1.7, "{order}");
    assert!(dir.path().join("convergence.csv").exists());
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o = unitmass(&[
        "sweep",
        "--config",
        arg(&configs().join("separable.toml")),
        "--param",
        "colour",
        "--values",
        "1,2",
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(is_empty_dir(&out));
}

#[test]
fn sweep_requires_values() {
    let o = unitmass(&["sweep", "--config", arg(&configs().join("separable.toml")), "--param", "dim", "--values"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn sweep_over_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let o =
        unitmass(&["sweep", "--config", arg(&configs().join("separable.toml")), "--param", "dim", "--values", "1,2", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sweep.csv").exists() && out.join("sweep.json").exists());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
}
