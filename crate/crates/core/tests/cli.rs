use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn ergot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergot"))
        .args(args)
        .env_remove("ERGOT_TOL")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_c3x2_fixture() {
    let out = ergot(&["solve", fixture("c3x2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["command"], "solve");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert!(doc["inputs_digest"].as_str().unwrap().starts_with("sha256:"));
    let v = doc["results"]["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() < 1e-12);
    assert_eq!(doc["results"]["status"], "Optimal");
}

#[test]
fn bad_mass_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("c3x2.json"))
        .unwrap()
        .replace(r#""weights": [0.5, 0.5]"#, r#""weights": [0.45, 0.45]"#);
    let path = write_temp(&dir, "bad.json", &text);
    let out = ergot(&["solve", &path]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("mass sum 0.9 ≠ 1 at marginals.mu"), "{err}");
}

#[test]
fn csv_plan_has_one_row_per_cell() {
    let out = ergot(&["solve", "--format", "csv", fixture("two_point.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "row,col,mass");
}

#[test]
fn identity_kernel_stationarity_is_plain_transport() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "version": 1,
        "space": 2,
        "kernel": [[1, 0], [0, 1]],
        "cost": [[0, 1], [1, 0]],
        "marginals": {"mu": [1, 0], "nu": [0, 1]},
        "restriction": "stationarity"
    }"#;
    let path = write_temp(&dir, "p.json", text);
    let out = ergot(&["solve", &path]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["results"]["value"].as_f64(), Some(1.0));
    assert_eq!(doc["results"]["constraints"].as_u64(), Some(0));
}

#[test]
fn decompose_uniform_c3x2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("c3x2.json")).unwrap();
    let path = write_temp(&dir, "u.json", &text);
    let doc = json(&ergot(&["decompose", &path]));
    let w: Vec<f64> = doc["results"]["mu"]["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(w, vec![0.5, 0.5]);
    assert_eq!(doc["results"]["mu"]["barycenter_error"].as_f64(), Some(0.0));
    assert!(doc["results"]["plan"]["reconstruction_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn decompose_absorbing_chain() {
    let out = ergot(&["decompose", fixture("absorbing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["results"]["mu"]["weights"], serde_json::json!([0.3, 0.7]));
    assert_eq!(doc["results"]["boundary"]["transient"], serde_json::json!(["middle"]));
}

#[test]
fn decompose_non_member_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("c3x2.json"))
        .unwrap()
        .replace(r#"{ "weights": [0.5, 0.5] }"#, "[1, 0, 0, 0, 0, 0]");
    let path = write_temp(&dir, "n.json", &text);
    let out = ergot(&["decompose", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("not in the simplex") && err.contains("generator T"), "{err}");
}

#[test]
fn verify_random_reports_every_instance() {
    let out = ergot(&["verify", "--random", "perm:n=6,cycles=3+3,count=50,seed=7"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let inst = doc["results"]["instances"].as_array().unwrap();
    assert_eq!(inst.len(), 50);
    assert!(inst.iter().all(|i| i["gap"].as_f64().unwrap() <= 1e-8));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["verify", "--random", "perm:n=8,count=12", "--seed", "3", "--jobs", "3"];
    let a = ergot(&args);
    let b = ergot(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = ergot(&["verify", "--random", "perm:n=8,count=12", "--seed", "3", "--jobs", "1"]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn verify_equal_marginals_has_zero_gap() {
    let doc = json(&ergot(&["verify", fixture("c3x2_equal.json").to_str().unwrap()]));
    assert_eq!(doc["results"]["gap"].as_f64(), Some(0.0));
    assert_eq!(doc["results"]["passed"], true);
}

#[test]
fn verify_check_geometric() {
    let out = ergot(&["verify", "--check", "geometric", fixture("c3x2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let g = &json(&out)["results"]["geometric"];
    assert_eq!(g["passed"], true);
    for key in ["diagonal_failures", "product_failures", "transpose_failures"] {
        assert_eq!(g[key].as_array().unwrap().len(), 0);
    }
}

#[test]
fn check_stationarity_is_not_geometric() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("c3x2.json"))
        .unwrap()
        .replace(r#""restriction": "invariance""#, r#""restriction": "stationarity""#);
    let path = write_temp(&dir, "s.json", &text);
    let out = ergot(&["check", "--property", "geometric", &path]);
    assert_eq!(out.status.code(), Some(2));
    let out = ergot(&["check", "--property", "coherency", &path]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn metric_reports_boundary_matrix() {
    let out = ergot(&["metric", fixture("c3x2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["results"]["dbar"], serde_json::json!([[0.0, 2.0], [2.0, 0.0]]));
    assert!((doc["results"]["lifted"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn tolerance_flag_beats_environment() {
    let f = fixture("c3x2.json");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergot"));
        cmd.args(["verify", f.to_str().unwrap()]);
        cmd.env_remove("ERGOT_TOL");
        if let Some(e) = env {
            cmd.env("ERGOT_TOL", e);
        }
        if let Some(t) = flag {
            cmd.args(["--tol", t]);
        }
        let out = cmd.output().unwrap();
        json(&out)["results"]["tol"].as_f64().unwrap()
    };
    assert_eq!(run(None, None), 1e-8);
    assert_eq!(run(Some("1e-6"), None), 1e-6);
    assert_eq!(run(Some("1e-6"), Some("1e-4")), 1e-4);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = ergot(&[
        "metric",
        fixture("c3x2.json").to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(doc["command"], "metric");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ergot(&["solve"]).status.code(), Some(1));
    assert_eq!(ergot(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ergot(&["check", "--format", "csv", fixture("c3x2.json").to_str().unwrap()]).status.code(), Some(1));
}
