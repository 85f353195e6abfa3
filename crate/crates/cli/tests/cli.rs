use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stieltjes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_rhs_gives_constant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("zero_rhs.json");
    let out = run(&["solve", path_str(&f), "--out", path_str(dir.path())]);
    assert!(out.status.success());
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("zero_rhs.json")).unwrap()).unwrap();
    assert_eq!(summary["residual"], serde_json::json!([0.0, 0.0]));
    let csv = std::fs::read_to_string(dir.path().join("zero_rhs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,post_jump,x_1,x_2");
    let rows: Vec<&str> = lines.collect();
    // 41 grid points plus a post-jump row at each of the three jumps.
    assert_eq!(rows.len(), 41 + 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "1.5000000000000000e0");
        assert_eq!(cols[3], "-2.0000000000000000e0");
    }
}

#[test]
fn impulsive_exponential_reaches_two_e_squared() {
    let f = fixture("impulsive.json");
    let exact = 2.0 * std::f64::consts::E.powi(2);
    for method in ["euler", "picard"] {
        let v = json_stdout(&run(&["solve", path_str(&f), "--method", method]));
        let x = v["final_value"][0].as_f64().unwrap();
        assert!((x - exact).abs() / exact <= 5e-3, "{method}: {x}");
    }
}

#[test]
fn validation_and_solver_errors_have_distinct_codes() {
    let out = run(&["solve", path_str(&fixture("missing_derivator.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined derivator `nope`"));

    let out = run(&["solve", path_str(&fixture("divergent.json"))]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["solve", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["solve", path_str(&fixture("impulsive.json")), "--grid", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_and_bound_sections() {
    let v = json_stdout(&run(&[
        "solve",
        path_str(&fixture("omega_k_example.json")),
        "--certify",
        "--bound",
    ]));
    assert_eq!(v["certificates"]["uniqueness"]["verdict"], "MONTEL-TONELLI-UNIQUE");
    assert_eq!(v["bound"]["passed"], true);
    assert!(v["final_value"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64() == Some(0.0)));

    let v = json_stdout(&run(&["solve", path_str(&fixture("riccati_ball.json")), "--certify"]));
    let sigma = v["sigma"].as_f64().unwrap();
    assert_eq!(sigma, 39.0 / 256.0);
    assert_eq!(v["certificates"]["horizon"]["sigma"].as_f64(), Some(sigma));
    let x = v["final_value"][0].as_f64().unwrap();
    assert!((x - 1.0 / (1.0 - sigma)).abs() < 1e-4);

    let v = json_stdout(&run(&["solve", path_str(&fixture("smooth.json")), "--bound"]));
    assert!(v["bound"]["error"].as_str().unwrap().contains("no modulus"));
}

#[test]
fn classify_reports_sets_and_relations() {
    let v = json_stdout(&run(&["classify", path_str(&fixture("classify.json"))]));
    let c = &v["classifications"]["id_jump"];
    assert_eq!(c["constancy"], serde_json::json!([]));
    assert_eq!(c["discontinuities"], serde_json::json!([1.0]));
    let rel = v["relations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["first"] == "id" && r["second"] == "id_jump")
        .unwrap();
    assert_eq!(rel["relatively_continuous"], true);
    assert_eq!(rel["equal_topologies"], false);
}

#[test]
fn compare_refines() {
    let v = json_stdout(&run(&["compare", path_str(&fixture("smooth.json"))]));
    assert!(v["refinement_ratio"].as_f64().unwrap() >= 1.5);
}

#[test]
fn check_osgood_verdicts() {
    for k in 1..=3 {
        let out = run(&["check-osgood", &format!("omega_k({k})")]);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: DIVERGENT"));
    }
    let out = run(&["check-osgood", "sqrt(t)"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: CONVERGENT"));
    let out = run(&["check-osgood", "t + 1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_and_ftc_check() {
    let f = fixture("classify.json");
    let v = json_stdout(&run(&[
        "measure",
        path_str(&f),
        "--derivator",
        "id_jump",
        "--cover",
        "[[0, 0.5], [0.25, 1.5]]",
        "--integrand",
        "t",
    ]));
    assert_eq!(v["measure"].as_f64(), Some(2.5));
    assert!((v["integral"].as_f64().unwrap() - 2.125).abs() < 1e-12);

    let out = run(&["measure", path_str(&f), "--derivator", "id", "--cover", "[[1, 0]]"]);
    assert_eq!(out.status.code(), Some(2));

    let v = json_stdout(&run(&[
        "ftc-check",
        path_str(&f),
        "--derivator",
        "flat_jump",
        "--f",
        "cos(3*t)",
    ]));
    assert_eq!(v["failures"], serde_json::json!([]));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = ["impulsive.json", "smooth.json", "omega_k_example.json"]
        .iter()
        .map(|f| fixture(f))
        .collect();
    let mut args_a = vec![
        "solve",
        "--certify",
        "--bound",
        "--jobs",
        "3",
        "--out",
        path_str(a.path()),
    ];
    let mut args_b = vec!["solve", "--certify", "--bound", "--out", path_str(b.path())];
    for f in &files {
        args_a.push(path_str(f));
        args_b.push(path_str(f));
    }
    assert!(run(&args_a).status.success());
    assert!(run(&args_b).status.success());
    for f in ["impulsive", "smooth", "omega_k_example"] {
        for ext in ["csv", "json"] {
            let name = format!("{f}.{ext}");
            assert_eq!(
                std::fs::read(a.path().join(&name)).unwrap(),
                std::fs::read(b.path().join(&name)).unwrap(),
                "{name}"
            );
        }
    }
}
