use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn critjac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critjac")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_regimes() {
    let o = critjac(&["classify", "--alpha", "0.8", "--b", "1", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let j = stdout_json(&o);
    assert_eq!(j["regime"], "critical-hyperbolic");
    assert_eq!(j["carleman"]["verdict"], "divergent");

    let o = critjac(&["classify", "--lambda", "-1"]);
    assert_eq!(stdout_json(&o)["regime"], "critical-elliptic");

    let o = critjac(&["classify", "--lambda", "0", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("alpha,b,lambda,regime,"));
    assert!(text.lines().nth(1).unwrap().contains(",degenerate,"));
}

#[test]
fn invalid_parameters_exit_2() {
    let o = critjac(&["classify", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha out of (2/3,1)"), "{}", stderr(&o));
    let o = critjac(&["verify", "--b", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = critjac(&["scan", "--lambda", "1:2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = critjac(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_short_range_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = critjac(&["verify", "--n-max", "300", "--digits", "30", "--out", out.to_str().unwrap()]);
    let err = stderr(&o);
    assert!(err.contains("insufficient range for slope fits"), "{err}");
    assert!(err.contains("raised to"), "{err}");
    // the odd/even constant check fails at every hyperbolic point
    assert_eq!(o.status.code(), Some(1), "{err}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(report["config"]["digits"].as_u64().unwrap() > 30);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().all(|n| n.ends_with("odd-even-constant")), "{failed:?}");
    for stem in ["trace_dominant", "trace_subordinate"] {
        let text = std::fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,re(u_even),im(u_even),re(u_odd),im(u_odd),envelope_ratio,wronskian_drift"
        );
        assert!(lines.count() >= 300);
    }
}

#[test]
fn verify_elliptic_point() {
    let o = critjac(&["verify", "--lambda", "-1", "--n-max", "600"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert_eq!(j["classification"]["regime"], "critical-elliptic");
    assert_eq!(j["skipped"].as_array().unwrap().len(), 1);
    assert!(j["checks"].as_array().unwrap().iter().any(|c| c["name"] == "wronskian" && c["passed"] == true));
}

#[test]
fn scan_grid_rows() {
    let o = critjac(&["scan", "--alpha", "0.7:0.9:3", "--b", "1", "--lambda", "-1:1:5", "--workers", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        let lambda: f64 = r[3].parse().unwrap();
        let expect = if lambda > 0.0 {
            "critical-hyperbolic"
        } else if lambda < 0.0 {
            "critical-elliptic"
        } else {
            "degenerate"
        };
        assert_eq!(r[4], expect);
    }
}

#[test]
fn scan_json_with_envelope() {
    let o = critjac(&["scan", "--lambda", "-1:1:2", "--n-max", "200", "--envelope", "--format", "json"]);
    let j = stdout_json(&o);
    let rows = j.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["envelope_drift"].is_null());
    assert!(rows[1]["envelope_drift"].as_f64().unwrap() < 0.2);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn levinson_exact_diagonal_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "diag.json",
        r#"{"name": "diag", "p": {"family": "power", "exponent": -1, "shift": 1}, "V": [[-1, 0], [0, 0]], "R": {"family": "zero"}}"#,
    );
    let o = critjac(&["levinson", "--spec", &spec, "--n-max", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert_eq!(j["kind"], "hyperbolic");
    assert_eq!(j["tail_residuals"], serde_json::json!([0.0, 0.0]));
    assert_eq!(j["directions"][0], serde_json::json!([[1.0, 0.0], [0.0, 0.0]]));
    assert_eq!(j["normalized_solutions"][1], serde_json::json!([[0.0, 0.0], [1.0, 0.0]]));
}

#[test]
fn levinson_l_stage_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "l.json", r#"{"builtin": "paper-L-stage", "alpha": 0.8, "b": 1, "lambda": 1}"#);
    let o = critjac(&["levinson", "--spec", &spec, "--n-max", "800"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = stdout_json(&o);
    assert_eq!(j["kind"], "hyperbolic");
    let mu1 = j["mu_limits"][0][0].as_f64().unwrap();
    assert!((mu1 + 1.0).abs() < 0.15, "{mu1}");
    assert!(j["tail_residuals"][1].as_f64().unwrap() < 1e-2);
}

#[test]
fn levinson_malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.json", "{\"p\": 1,\n \"V\": [[1, 0], [0 0]]}");
    let o = critjac(&["levinson", "--spec", &spec]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2, column"), "{err}");
    let o = critjac(&["levinson", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(2));
}
