//! Schema checks for the files that downstream plotting reads.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use unitmass_core::harness::{converge, run, sweep, write_convergence, write_outputs, write_sweep, ExperimentConfig};

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))).unwrap()
}

/// Header of a CSV file and its data rows, each parsed as numbers.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().expect("header").split(',').map(str::to_string).collect();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().expect("numeric cell")).collect()).collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "{}", path.display());
    }
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_directory_layout() {
    let exp = run(&config("algebraic_n1_g4")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&exp, dir.path()).unwrap();

    let (h, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(h, ["s", "mass", "K", "sup", "center", "lp_0.5", "lp_1", "lp_2"]);
    assert_eq!(rows[0][0], 0.0);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));

    let (h, rows) = read_csv(&dir.path().join("tables.csv"));
    assert_eq!(h, ["t", "h", "g", "E", "L"]);
    assert_eq!(rows.len(), exp.config.t_count + 1);

    let (h, _) = read_csv(&dir.path().join("s_tables.csv"));
    assert_eq!(h, ["s", "Hprime", "H", "G"]);

    let (h, rows) = read_csv(&dir.path().join("predictions.csv"));
    assert_eq!(h, ["t", "E_pred_upper", "E_pred_lower"]);
    // Both laws pass through the measured value at the fit-window start.
    let anchor = exp.report.fitted.fit.as_ref().unwrap().fit.window.0;
    assert!(rows.iter().filter(|r| r[0] >= anchor).all(|r| r[1] >= r[2] - 1e-12), "upper law lies above lower law");

    let snaps: Vec<_> =
        fs::read_dir(dir.path().join("snapshots")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(snaps.iter().any(|n| n == "v_s0.csv") && snaps.iter().any(|n| n == "v_s1.csv"), "{snaps:?}");
    for name in &snaps {
        assert!(name.starts_with("v_s") && name.ends_with(".csv"));
        let (h, rows) = read_csv(&dir.path().join("snapshots").join(name));
        assert_eq!(h, ["r", "value"]);
        assert_eq!(rows.len(), exp.config.intervals + 1);
    }

    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["config_echo"]["schema_version"], 1);
    assert_eq!(r["verdict"]["status"], "pass");
    assert_eq!(r["fitted"]["fit"]["law"], "log_slope");
    for key in ["rate", "stderr", "r2", "intercept", "window"] {
        assert!(!r["fitted"]["fit"][key].is_null(), "fitted.fit.{key}");
    }
    assert!(r["fitted"]["attained"]["t_max"].as_f64().unwrap() >= 1e3);
    assert_eq!(r["predicted"]["band"], serde_json::json!([0.6, 1.1]));
    assert!(r["predicted"]["upper"]["slope"].as_f64().is_some());
    assert!(r["predicted"]["lower"]["slope"].as_f64().is_some());
}

#[test]
fn convergence_directory_layout() {
    let report = converge(&config("separable"), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_convergence(&report, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(h, ["level", "intervals", "dr", "error", "res_0.5", "res_1", "res_2"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], 2.0 * rows[0][1]);
    let j = json(&dir.path().join("convergence.json"));
    assert_eq!(j["exact_orders"].as_array().unwrap().len(), 1);
}

#[test]
fn sweep_directory_layout() {
    let s = sweep(&config("algebraic_n1_g4"), "gamma", &[3.0, 4.0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sweep(&s, dir.path()).unwrap();
    let (h, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(h, ["value", "rate", "stderr", "r2", "predicted_upper", "predicted_lower"]);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [3.0, 4.0]);
    let j = json(&dir.path().join("sweep.json"));
    assert_eq!(j["param"], "gamma");
    for e in j["entries"].as_array().unwrap() {
        let name = e["name"].as_str().unwrap();
        assert!(dir.path().join(name).join("tables.csv").exists(), "{name}");
    }
}
