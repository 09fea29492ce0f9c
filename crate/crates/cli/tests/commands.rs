use std::path::Path;
use std::process::Command;

use serde_json::Value;

const MOTZKIN: &str = "1 + x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2";
const TRI1: &str = "6 + x1^2*x2^6 + 2*x1^4*x2^6 + x1^8*x2^2 - 1.2*x1^2*x2^3 - 0.85*x1^3*x2^5 - 0.9*x1^4*x2^3 - 0.73*x1^5*x2^2 - 1.14*x1^7*x2^2";

fn sonc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sonc")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn sonc_json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let (code, stdout, stderr) = sonc(&all);
    let v: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout} {stderr}"));
    assert_eq!(v["exit_code"], code);
    (code, v)
}

fn number(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn analyze_reports_structure() {
    let (code, out, _) = sonc(&["analyze", MOTZKIN]);
    assert_eq!(code, 0);
    assert!(out.contains("ST-polynomial, 1 tail term"), "{out}");
    assert!(out.contains("Δ(f): (2,2)"), "{out}");

    let (_, out, _) = sonc(&["analyze", "7/2"]);
    assert!(out.contains("sum of monomial squares"), "{out}");

    let (_, v) = sonc_json(&["analyze", "1 + x1^2 + x2^2 + x1^2*x2^2 - x1*x2"]);
    assert_eq!(v["analysis"]["status"], "not ST: vertex set is not a simplex");
    assert_eq!(v["analysis"]["vertices"].as_array().unwrap().len(), 4);

    let (_, out, _) = sonc(&["analyze", "1 - x1^2"]);
    assert!(out.contains("not nonnegative"), "{out}");
}

#[test]
fn parse_errors_exit_with_input_code() {
    let (code, _, err) = sonc(&["analyze", "1 + x1^"]);
    assert_eq!(code, 2);
    assert!(err.contains("syntax error"), "{err}");
    let (code, v) = sonc_json(&["minimize", "1 + x3^2", "--n", "2"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("x3"));
    let (code, _, _) = sonc(&["minimize-constrained", MOTZKIN, "-g", "x1", "--strategy", "newton"]);
    assert_eq!(code, 2);
    let (code, _, _) = sonc(&["minimize", MOTZKIN, "--weights", "/nonexistent.json"]);
    assert_eq!(code, 2);
}

#[test]
fn minimize_motzkin() {
    let (code, v) = sonc_json(&["minimize", MOTZKIN, "--validate"]);
    assert_eq!(code, 0);
    assert!(number(&v["bound"]).abs() < 1e-6);
    assert_eq!(v["program_kind"], "unconstrained-gp");
    assert_eq!(v["heuristic"], false);
    assert_eq!(v["validation"]["passed"], true);
    assert!(v["certificate"].is_object());
    assert!(v["solver"].get("wall_time_ms").is_none());

    let (_, out, _) = sonc(&["minimize", MOTZKIN, "--timing"]);
    assert!(out.starts_with("lower bound: "), "{out}");
    assert!(out.contains(" ms"), "{out}");
}

#[test]
fn minimize_with_a_cover() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", "[[[0,0],[2,6],[4,6]], [[0,0],[4,6],[8,2]]]");
    let (code, v) = sonc_json(&["minimize", TRI1, "--triangulation", &tri]);
    assert_eq!(code, 0);
    assert_eq!(v["program_kind"], "cover");
    assert!((number(&v["bound"]) - 3.269).abs() < 5e-3, "{v}");
    assert_eq!(v["pieces"].as_array().unwrap().len(), 2);

    let weights = write(dir.path(), "w.json", r#"{"fractions": [{"exponent": [2,3], "shares": [1, 0]}]}"#);
    let (_, v) = sonc_json(&["minimize", TRI1, "--triangulation", &tri, "--weights", &weights]);
    assert!((number(&v["bound"]) - 3.572).abs() < 5e-3, "{v}");

    let (code, v) = sonc_json(&["minimize", TRI1, "--triangulation", &tri, "--weights", "optimize:200", "--validate"]);
    assert_eq!(code, 0);
    assert!(number(&v["bound"]) >= 3.269);
    assert_eq!(v["heuristic"], true);
    assert_eq!(v["validation"]["passed"], true);

    let bad = write(dir.path(), "bad.json", r#"{"fractions": [{"exponent": [2,3], "shares": [1, 1]}]}"#);
    let (code, v) = sonc_json(&["minimize", TRI1, "--triangulation", &tri, "--weights", &bad]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("invalid weights"));
}

#[test]
fn non_st_input_falls_back_to_the_cover() {
    let (code, v) = sonc_json(&["minimize", "1 + x1^2 + x2^2 + x1^2*x2^2 - x1*x2", "--validate"]);
    assert_eq!(code, 0);
    assert_eq!(v["program_kind"], "cover");
    assert!(number(&v["bound"]).is_finite());
    assert_eq!(v["validation"]["passed"], true);
}

#[test]
fn non_origin_targets() {
    let f = "1 + x1^4 + x2^2 + x1^2*x2^4 + x1^4*x2^4 - x1*x2 - x1*x2^2 - x1^2*x2^3 - x1^3*x2^3";
    let (code, v) = sonc_json(&["minimize", f, "--cover", "--target", "4,0"]);
    assert_eq!(code, 0);
    let required = &v["required"][0];
    assert_eq!(required[0], serde_json::json!([4, 0]));
    assert!(number(&required[1]) > 1.0);
    let (code, _) = sonc_json(&["minimize", f, "--cover", "--target", "4"]);
    assert_eq!(code, 2);
}

#[test]
fn constrained_examples() {
    let (code, v) = sonc_json(&["minimize-constrained", "1 + x1^4*x2^2 + x1*x2", "-g", "1/2 + x1^2*x2^4 - x1^2*x2^6", "--validate"]);
    assert_eq!(code, 0);
    assert!((number(&v["bound"]) - 0.4474).abs() < 1e-3);
    assert!((number(&v["gamma"]) - 0.5526).abs() < 1e-3);
    assert_eq!(v["program_kind"], "constrained-gp");

    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.json",
        r#"{"f": "1 + x1^2*x3^2 + x2^2*x3^2 + x1^2*x2^2 - 8*x1*x2*x3", "constraints": ["x1^2*x2*x3 + x1*x2^2*x3 + x1^2*x2^2 - 2 + x1*x2*x3"], "n": 3}"#,
    );
    let (_, v) = sonc_json(&["minimize-constrained", "--problem", &problem, "--scale-exponents", "10"]);
    assert!((number(&v["bound"]) + 15.0).abs() < 1e-5, "{v}");

    let (_, v) = sonc_json(&["minimize-constrained", MOTZKIN, "-g", "x1^3*x2^2", "--strategy", "gp"]);
    assert!(number(&v["bound"]).abs() < 1e-6);

    let (_, v) = sonc_json(&["minimize-constrained", MOTZKIN, "-g", "x1^3*x2^2", "--strategy", "snp"]);
    assert!(number(&v["bound"]).abs() < 1e-6);
    assert_eq!(v["heuristic"], v["program_kind"] == "constrained-snp");
}

#[test]
fn constrained_cover() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.json", "[[[0,0],[80,0],[120,80]], [[0,0],[120,80],[40,80]]]");
    let (code, v) = sonc_json(&[
        "minimize-constrained",
        "1 + x1^4 + x1^2*x2^4",
        "-g",
        "1/2 + x1^2*x2 - x1^6*x2^4 - x1^3*x2^3",
        "--cover",
        "--scale-exponents",
        "20",
        "--triangulation",
        &tri,
    ]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["program_kind"], "cover-constrained");
    assert!((number(&v["bound"]) - 1.0).abs() < 1e-6);
    let (code, _) = sonc_json(&["minimize-constrained", "1 + x1^4", "-g", "1 - x1^2", "--cover", "--weights", "optimize:5"]);
    assert_eq!(code, 2);
}

#[test]
fn certificates_round_trip_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json").display().to_string();
    let problem = write(dir.path(), "p.json", &format!(r#"{{"f": "{MOTZKIN}", "n": 2}}"#));
    let (code, _, _) = sonc(&["minimize", "--problem", &problem, "--cert-out", &cert]);
    assert_eq!(code, 0);
    let (code, out, _) = sonc(&["verify", &cert, &problem]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("certificate verified"));

    // Tamper with the tail coefficient of the circuit.
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    for term in doc["certificate"]["circuits"][0].as_array_mut().unwrap() {
        if term["exponent"] == serde_json::json!([2, 2]) {
            term["coefficient"] = Value::String("-301/100".into());
        }
    }
    let tampered = write(dir.path(), "tampered.json", &doc.to_string());
    let (code, v) = sonc_json(&["verify", &tampered, &problem]);
    assert_eq!(code, 1);
    assert_eq!(v["verified"], false);

    let other = write(dir.path(), "other.json", r#"{"f": "1 + x1^4*x2^2 + x1^2*x2^4 - 2*x1^2*x2^2", "n": 2}"#);
    let (code, _, _) = sonc(&["verify", &cert, &other]);
    assert_eq!(code, 1);

    // A claim above what the certificate supports is rejected.
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    doc["bound"] = serde_json::json!(0.5);
    let inflated = write(dir.path(), "inflated.json", &doc.to_string());
    let (code, _, _) = sonc(&["verify", &inflated, &problem]);
    assert_eq!(code, 1);
}

#[test]
fn constrained_certificates_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json").display().to_string();
    let problem = write(dir.path(), "p.json", r#"{"f": "1 + x1^4*x2^2 + x1*x2", "constraints": ["1/2 + x1^2*x2^4 - x1^2*x2^6"], "n": 2}"#);
    let (code, _, _) = sonc(&["minimize-constrained", "--problem", &problem, "--cert-out", &cert]);
    assert_eq!(code, 0);
    let (code, v) = sonc_json(&["verify", &cert, &problem]);
    assert_eq!(code, 0, "{v}");
    assert!((number(&v["bound"]) - 0.4474).abs() < 1e-3);

    let unconstrained = write(dir.path(), "f.json", r#"{"f": "1 + x1^4*x2^2 + x1*x2", "n": 2}"#);
    let (code, _, _) = sonc(&["verify", &cert, &unconstrained]);
    assert_eq!(code, 1);
}

#[test]
fn identical_invocations_give_identical_json() {
    let args = ["minimize", TRI1, "--weights", "optimize:40", "--validate", "--seed", "3", "--json"];
    let (_, a, _) = sonc(&args);
    let (_, b, _) = sonc(&args);
    assert_eq!(a, b);
}
