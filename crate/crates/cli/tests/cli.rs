use std::path::Path;
use std::process::{Command, Output};

fn gaussmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussmin")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const IDENTITY: &str = r#"{"sigma": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}"#;

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("JSON error on stderr");
    v["error"].as_str().unwrap().to_owned()
}

#[test]
fn forward_identity_writes_the_orthant_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", IDENTITY);
    let out = dir.path().join("out");
    let o = gaussmin(&["forward", "--input", &input, "--outdir", out.to_str().unwrap(), "--t-min", "-1", "--t-max", "1", "--grid-points", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tail = std::fs::read_to_string(out.join("tail.csv")).unwrap();
    let row = tail.lines().find(|l| l.starts_with("0.0000000000000000e0,")).expect("row at t = 0");
    let m: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((m - 0.125).abs() < 1e-12, "{row}");
    for f in ["triangle.json", "radon.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!((summary["kappa"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", r#"{"sigma": [[2, 0.3, -0.1], [0.3, 1, 0.2], [-0.1, 0.2, 1.5]]}"#);
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = gaussmin(&["forward", "--input", &input, "--outdir", out.to_str().unwrap(), "--mc-samples", "1000", "--seed", "3"]);
        assert!(o.status.success());
        files.push(["tail.csv", "samples.csv", "summary.json", "radon.csv"].map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn non_spd_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", r#"{"sigma": [[1, 2, 0], [2, 1, 0], [0, 0, 1]]}"#);
    let o = gaussmin(&["forward", "--input", &input, "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "not_admissible");
}

#[test]
fn inadmissible_input_is_rejected() {
    // positive definite, but Σ⁻¹𝟏 has negative entries
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", r#"{"sigma": [[4, 0.5, 0.8], [0.5, 4, 0.8], [0.8, 0.8, 0.4]]}"#);
    let o = gaussmin(&["roundtrip", "--input", &input, "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "not_admissible");
}

#[test]
fn empty_and_malformed_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let o = gaussmin(&["recover", "--input", &empty, "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", "{\"sigma\": [[1, 0], [0, 1]]}");
    let o = gaussmin(&["forward", "--input", &bad, "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "parse");
    let o = gaussmin(&["forward", "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", IDENTITY);
    let blocker = write(dir.path(), "file", "");
    let o = gaussmin(&["forward", "--input", &input, "--outdir", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "io");
}

#[test]
fn identity_round_trip_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", IDENTITY);
    let o = gaussmin(&["roundtrip", "--input", &input, "--outdir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(rep["distance_to_truth"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn recover_reads_a_forward_tail() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", r#"{"sigma": [[1.5, -0.2, 0.1], [-0.2, 1, 0.3], [0.1, 0.3, 0.8]]}"#);
    let fwd = dir.path().join("fwd");
    assert!(gaussmin(&["forward", "--input", &input, "--outdir", fwd.to_str().unwrap()]).status.success());
    let tail = fwd.join("tail.csv");
    let o = gaussmin(&["recover", "--input", tail.to_str().unwrap(), "--outdir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("recovery_report.json")).unwrap()).unwrap();
    let s = &rep["sigma_hat"];
    let diag: Vec<f64> = (0..3).map(|i| s[i][i].as_f64().unwrap()).collect();
    let mut sorted = diag.clone();
    sorted.sort_by(f64::total_cmp);
    for (got, want) in sorted.iter().zip([0.8, 1.0, 1.5]) {
        assert!((got - want).abs() < 1e-3, "{diag:?}");
    }
}

#[test]
fn counterexample_transforms_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = gaussmin(&["counterexample", "--outdir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("counterexample.json")).unwrap()).unwrap();
    assert!(v["max_abs_diff"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["congruent"], serde_json::Value::Bool(false));
    assert_eq!(std::fs::read_to_string(dir.path().join("diff.csv")).unwrap().lines().count(), 1001);
}

#[test]
fn unknown_route_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "sigma.json", IDENTITY);
    let o = gaussmin(&["roundtrip", "--input", &input, "--route", "guess", "--outdir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
