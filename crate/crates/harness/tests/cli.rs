//! Runs the `jostlab` binary on small configs and inspects exit codes and
//! output files.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const WELL: &str = r#"
p = 0.5
tasks = ["spectrum", "trace", "theorem"]
sweep = [1.0]
seed = 3

[potential.well]
kind = "step"
segments = [{ x_lo = 0.0, x_hi = 1.0, value = [-4.0, 0.0] }]
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_jostlab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn empty_config_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "", &["all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["jobs"].as_array().unwrap().len(), 0);
    assert_eq!(r["summary"]["checks"], 0);
    let csv = std::fs::read_to_string(dir.path().join("out/theorem.csv")).unwrap();
    assert_eq!(csv.trim_end(), "id,c,lhs,m1,mp,rhs_core,ratio");
}

#[test]
fn square_well_passes_and_matches_the_closed_form_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), WELL, &["all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let trace = &r["jobs"][0]["trace"];
    let lhs = trace["lhs"].as_f64().unwrap();
    assert!(trace["discrepancy"].as_f64().unwrap() <= 1e-5 * (1.0 + lhs.abs()));

    // One bound state at k = iκ; ∫|V| = 4, ∫x^{1/2}|V| = 8/3.
    let kappa = 0.6380450482852377;
    let expected = kappa / (8.0 / 3.0 * 2.0 + 4.0);
    let row = &r["theorem"][0];
    assert_eq!(row["id"], "well");
    assert!((row["lhs"].as_f64().unwrap() - kappa).abs() < 1e-9);
    assert!((row["ratio"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn impossible_trace_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{WELL}\n[tolerances]\ntrace = 1e-15\n");
    let out = run(dir.path(), &config, &["trace"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace.identity"));
    let r = report(dir.path());
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["trace.identity"]);
}

#[test]
fn invalid_configs_exit_two() {
    for bad in [
        "p = 1.5",
        "tasks = []",
        "bogus = 1",
        "[potential.x]\nkind = \"step\"\nsegments = [{ x_lo = 1.0, x_hi = 0.0, value = [1.0, 0.0] }]",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(dir.path(), bad, &["all"]);
        assert_eq!(out.status.code(), Some(2), "config {bad:?}");
        assert!(!dir.path().join("out/report.json").exists());
    }
}

#[test]
fn missing_config_file_exits_two() {
    let out =
        Command::new(env!("CARGO_BIN_EXE_jostlab")).args(["--config", "/nonexistent/x.toml", "all"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let config = r#"
tasks = ["bounds", "theorem"]
sweep = [1.0, 2.0]
seed = 11

[potential.g]
kind = "gaussian"
amplitude = [-2.0, 1.0]
width = 0.7
center = 1.0
"#;
    let files = ["report.json", "theorem.csv", "constants.json", "checks.csv", "zeros.csv"];
    let read = |d: &Path| files.map(|f| std::fs::read(d.join("out").join(f)).unwrap());
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = run(d.path(), config, &["--format", "csv", "all"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn svg_plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), WELL, &["--svg", "spectrum"]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["well_c1_k.svg", "well_c1_lambda.svg"] {
        let s = std::fs::read_to_string(dir.path().join("out").join(f)).unwrap();
        assert!(s.starts_with("<svg"), "{f}");
    }
}
