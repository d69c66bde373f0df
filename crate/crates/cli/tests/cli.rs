use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_torsion");
const HALF_PI: &str = "1.5707963267948966";

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("TORSION_OUT")
        .current_dir(dir)
        .output()
        .expect("spawn torsion")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(schema_name)).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}");
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Runs a command that must succeed, checks the stdout echo, and returns the output directory.
fn ok(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out_dir = dir.path().join(name);
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out_dir.to_str().unwrap().to_string();
    full.extend(["--out", &out_str]);
    let out = run_in(dir.path(), &full);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let echo: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_valid("files", &echo);
    for f in echo["files"].as_array().unwrap() {
        assert!(Path::new(f.as_str().unwrap()).is_file());
    }
    out_dir
}

fn csv_rows(path: impl AsRef<Path>) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn predict_faraway_quarter_arc() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "p", &["predict", "--zeta", "faraway", "--arc-start", "0", "--arc-end", HALF_PI]);
    let v = read_json(out.join("prediction.json"));
    assert_valid("prediction", &v);
    let fail = v["fail_point"]["predicted_angle"].as_f64().unwrap();
    let curv = v["curvature_min"]["predicted_angle"].as_f64().unwrap();
    assert!((fail - 0.6154797).abs() < 1e-6, "{fail}");
    assert!((curv - 0.6847192).abs() < 1e-6, "{curv}");
    assert_eq!(v["fail_point"]["nondegenerate"], Value::Bool(true));
    assert_eq!(v["contacts"]["angles"], serde_json::json!([0.0]));
}

#[test]
fn predict_degenerate_profiles() {
    let dir = TempDir::new().unwrap();
    for (name, zeta) in [("translation", "translation"), ("zero", "{}")] {
        let out = ok(&dir, name, &["predict", "--zeta", zeta]);
        let v = read_json(out.join("prediction.json"));
        assert_valid("prediction", &v);
        assert_eq!(v["fail_point"]["degenerate"], Value::Bool(true), "{name}");
        assert_eq!(v["curvature_min"]["degenerate"], Value::Bool(true), "{name}");
    }
}

#[test]
fn solve_disk_profile_is_constant() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "s", &["solve", "--zeta", "disk", "--t", "0.1"]);
    assert_valid("solve", &read_json(out.join("solve.json")));
    let (header, rows) = csv_rows(out.join("profile.csv"));
    assert_eq!(header, ["theta", "r", "kappa", "grad_sq_numeric", "grad_sq_firstorder", "F"]);
    assert_eq!(rows.len(), 1024);
    for col in 1..header.len() {
        let first = rows[0][col];
        assert!(rows.iter().all(|r| (r[col] - first).abs() < 1e-10), "column {} varies", header[col]);
    }
}

#[test]
fn failpoints_monotone_flags_endpoint() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        &dir,
        "f",
        &["failpoints", "--zeta", "monotone", "--t", "0.01", "--max-degree", "96", "--arc-start", "0", "--arc-end", HALF_PI],
    );
    let v = read_json(out.join("failpoints.json"));
    assert_valid("failpoints", &v);
    let points = v["result"]["points"].as_array().unwrap();
    assert!(points.iter().any(|p| p["endpoint"] == Value::Bool(true)));
    let angle = v["result"]["angles"][0].as_f64().unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{angle}");
}

#[test]
fn failpoints_faraway_with_distance() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "f", &["failpoints", "--zeta", "faraway", "--t", "0.01"]);
    let v = read_json(out.join("failpoints.json"));
    assert_valid("failpoints", &v);
    assert_eq!(v["result"]["angles"].as_array().unwrap().len(), 4);
    assert!(v["distance"]["ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn rectangle_long_side_wins() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "r", &["rectangle", "--length", "2", "--width", "1"]);
    let v = read_json(out.join("rectangle.json"));
    assert_valid("rectangle", &v);
    for w in v["fail_points"]["winners"].as_array().unwrap() {
        assert!(matches!(w["side"].as_str().unwrap(), "top" | "bottom"));
    }
    assert!(v["long_short_gap"].as_f64().unwrap() > 1e-4);
    assert_eq!(v["certificate"]["passes"], Value::Bool(true));
    let text = fs::read_to_string(out.join("side_profile.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "side,arc_param,grad_norm");
}

#[test]
fn sweep_errors_shrink() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "w", &["sweep", "--zeta", "faraway", "--t-list", "0.02,0.01,0.005", "--max-degree", "96"]);
    let v = read_json(out.join("sweep.json"));
    assert_valid("sweep", &v);
    let text = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,fail_angle_numeric,fail_angle_predicted,abs_error,error_ratio");
    let errors: Vec<f64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn reproduce_cases_pass() {
    let dir = TempDir::new().unwrap();
    for case in ["faraway", "rectangle", "translation"] {
        let out = ok(&dir, case, &["reproduce", "--case", case]);
        let v = read_json(out.join(case).join("verdict.json"));
        assert_valid("verdict", &v);
        assert_eq!(v["pass"], Value::Bool(true), "{case}");
        for f in v["files"].as_array().unwrap() {
            assert!(out.join(case).join(f.as_str().unwrap()).is_file(), "{case}: {f}");
        }
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["failpoints", "--zeta", "faraway", "--t", "0.02", "--max-degree", "96"];
    let a = ok(&dir, "a", &args);
    let b = ok(&dir, "b", &args);
    for name in ["failpoints.json", "profile.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let jobs = ok(&dir, "c", &["sweep", "--zeta", "faraway", "--t-list", "0.02,0.01", "--jobs", "1"]);
    let many = ok(&dir, "d", &["sweep", "--zeta", "faraway", "--t-list", "0.02,0.01", "--jobs", "3"]);
    assert_eq!(fs::read(jobs.join("sweep.json")).unwrap(), fs::read(many.join("sweep.json")).unwrap());
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = TempDir::new().unwrap();
    let out = ok(&dir, "p", &["predict", "--zeta", "faraway"]);
    let target = out.to_str().unwrap();
    let again = run_in(dir.path(), &["predict", "--zeta", "faraway", "--out", target]);
    assert_eq!(code(&again), 2);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let forced = run_in(dir.path(), &["predict", "--zeta", "monotone", "--out", target, "--force"]);
    assert_eq!(code(&forced), 0);
    assert_eq!(read_json(out.join("prediction.json"))["zeta"]["cos"]["2"], 13.0);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = run_in(dir.path(), &["solve"]);
    assert_eq!(code(&missing), 2);
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.contains("requires zeta") && stderr.contains("requires t"), "{stderr}");
    assert_eq!(code(&run_in(dir.path(), &["predict", "--zeta", "nope"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["rectangle", "--length", "1", "--width", "2"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["predict", "--zeta", "faraway", "--length", "2"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["solve", "--zeta", "faraway", "--t", "0.5"])), 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn numerical_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["solve", "--zeta", "monotone", "--t", "0.02", "--degree", "16", "--rtol", "1e-12"]);
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_and_env_output() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"command": "predict", "zeta": {"cos": {"2": 1, "4": -0.25}}, "arc": [0, 1.5707963267948966]}"#).unwrap();
    let env_out = dir.path().join("from_env");
    let out = Command::new(BIN)
        .args(["--config", config.to_str().unwrap()])
        .env("TORSION_OUT", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(env_out.join("prediction.json"));
    assert_valid("prediction", &v);
    assert!((v["arc"]["end"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-13);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"command": "predict", "zeta": "faraway", "colour": 3}"#).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["--config", bad.to_str().unwrap()])), 2);
}
