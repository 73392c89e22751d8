use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_markov-dilation"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_cnd_shorthand_passes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "z2.json", r#"{"cyclic":2, "delta":1}"#);
    let out = run(&["check-cnd", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
    assert_eq!(report["cocycle_dim"], 1);
    assert_eq!(report["schoenberg"].as_array().unwrap().len(), 5);
}

#[test]
fn check_cnd_hamming_dimension() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "h3.json",
        r#"{"group":{"kind":"hypercube","n":3},"psi":{"kind":"hamming"}}"#,
    );
    let out = run(&["check-cnd", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["cocycle_dim"], 3);
}

#[test]
fn check_cnd_reports_reason() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "bad.json",
        r#"{"group":{"kind":"cyclic","n":2},"psi":{"kind":"table","values":[1,1]}}"#,
    );
    let out = run(&["check-cnd", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["certificate"]["reason"], "psi(identity) must be 0");
    assert!(String::from_utf8_lossy(&out.stderr).contains("psi(identity) must be 0"));

    // ψ(2) = 9 exceeds (√ψ(1) + √ψ(1))², which no cocycle can realize
    let input = write(
        &dir,
        "neg.json",
        r#"{"group":{"kind":"cyclic","n":4},"psi":{"kind":"table","values":[0,1,9,1]}}"#,
    );
    assert_eq!(
        run(&["check-cnd", "--input", &input]).status.code(),
        Some(1)
    );
}

#[test]
fn malformed_input_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "broken.json", r#"{"group":"#);
    assert_eq!(
        run(&["check-cnd", "--input", &input]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--input", &input]).status.code(), Some(2));
    let input = write(&dir, "ok.json", r#"{"cyclic":3,"delta":1}"#);
    assert_eq!(
        run(&["verify", "--input", &input, "--times", "0,x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "--input", &input, "--tol", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "--input", &input, "--mc-samples", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn construction_errors() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "notcnd.json",
        r#"{"group":{"kind":"cyclic","n":4},"psi":{"kind":"table","values":[0,1,9,1]}}"#,
    );
    assert_eq!(run(&["verify", "--input", &input]).status.code(), Some(3));
    let input = write(
        &dir,
        "table.json",
        r#"{"group":{"kind":"table","mult":[[0,1],[0,1]]},"psi":{"kind":"table","values":[0,1]}}"#,
    );
    assert_eq!(run(&["verify", "--input", &input]).status.code(), Some(3));
}

#[test]
fn verify_dihedral4_passes() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "d4.json",
        r#"{"group":{"kind":"dihedral","n":4},"psi":{"kind":"delta","scale":1}}"#,
    );
    let out = dir.path().join("report.json");
    let status = run(&[
        "verify",
        "--input",
        &input,
        "--horizon",
        "2",
        "--mc-samples",
        "20000",
        "--samples",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let r = read_json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["pass"], true);
    assert!(r["max_residual"].as_f64().unwrap() <= 1e-9);
    let kinds: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["kind"].as_str().unwrap())
        .collect();
    for k in [
        "markov",
        "markov_product",
        "reversed",
        "reversed_product",
        "cocycle_law",
        "plancherel",
    ] {
        assert!(kinds.contains(&k), "missing {k}");
    }
    assert!(r["monte_carlo"]["pass"].as_bool().unwrap());
}

#[test]
fn verify_zero_psi_is_exact() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "zero.json",
        r#"{"group":{"kind":"symmetric","n":3},"psi":{"kind":"table","values":[0,0,0,0,0,0]}}"#,
    );
    let out = dir.path().join("report.json");
    let status = run(&[
        "verify",
        "--input",
        &input,
        "--horizon",
        "2",
        "--mc-samples",
        "0",
        "--samples",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let r = read_json(&out);
    assert_eq!(r["cocycle_dim"], 0);
    for c in r["checks"].as_array().unwrap() {
        let kind = c["kind"].as_str().unwrap();
        if kind.starts_with("markov") || kind.starts_with("reversed") {
            assert_eq!(c["residual"].as_f64().unwrap(), 0.0, "{kind}");
        }
    }
}

#[test]
fn corrupted_pi_names_the_failing_check() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d3.json", r#"{"dihedral":3,"delta":1}"#);
    let out = dir.path().join("report.json");
    let status = run(&[
        "verify",
        "--input",
        &input,
        "--mc-samples",
        "0",
        "--samples",
        "5",
        "--corrupt-pi",
        "2,0,0,1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&status.stderr);
    assert!(stderr.contains("FAIL markov_product"), "{stderr}");
    assert_eq!(read_json(&out)["pass"], false);
}

#[test]
fn report_is_deterministic_modulo_wall_time() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "z3.json", r#"{"cyclic":3,"delta":0.5}"#);
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let status = run(&[
            "verify",
            "--input",
            &input,
            "--mc-samples",
            "5000",
            "--samples",
            "10",
            "--seed",
            "7",
            "--horizon",
            "3/2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(status.status.code(), Some(0));
        let mut r = read_json(&out);
        r["wall_time_secs"] = Value::Null;
        reports.push(serde_json::to_string(&r).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn explain_prints_the_damping_factor() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "z2.json", r#"{"cyclic":2,"delta":1}"#);
    let out = run(&[
        "explain", "--input", &input, "--s", "1", "--u", "1/2", "--t", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.6065306597"), "{text}");

    let out = run(&[
        "explain", "--input", &input, "--s", "1", "--u", "1", "--t", "1",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let block = |label: &str| {
        let start = text.find(label).unwrap() + label.len();
        text[start..].split("\n\n").next().unwrap().to_string()
    };
    assert_eq!(block("pi_t(lambda_s) =\n"), block("E_u pi_t(lambda_s) =\n"));

    assert_eq!(
        run(&["explain", "--input", &input, "--s", "5", "--u", "0", "--t", "1"])
            .status
            .code(),
        Some(2)
    );
}
