use std::io::Write;
use std::process::{Command, Output, Stdio};

use proptest::prelude::*;
use serde_json::Value;

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_testrisk"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn defaults() -> String {
    let out = run(&["defaults"], "");
    assert!(out.status.success());
    stdout(&out)
}

fn plan_file(contents: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(contents.as_bytes()).unwrap();
    file
}

#[test]
fn defaults_pipe_into_matrix_csv() {
    let out = run(&["matrix", "--config", "-", "--format", "csv"], &defaults());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let dre = text.lines().find(|l| l.starts_with("DRE,")).unwrap();
    assert_eq!(dre, "DRE,10%,30%,60%,85%,95%");
    assert!(out.stderr.is_empty());
}

#[test]
fn estimate_plain_text() {
    let out = run(&["estimate", "--loc", "100000", "--loc-per-fp", "125", "--defects-per-fp", "1.0"], "");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("predicted: 800\n"));
}

#[test]
fn estimate_invalid_params_is_usage_error() {
    let out = run(&["estimate", "--loc", "100000", "--loc-per-fp", "0", "--defects-per-fp", "1"], "");
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("loc_per_fp"));
}

#[test]
fn whatif_high_dre() {
    let file = plan_file(&defaults());
    let path = file.path().to_str().unwrap();
    let out = run(&["whatif", "--config", path, "--set", "levels.HIGH.dre=0.8", "--json"], "");
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let high = v["matrix"]["levels"].as_array().unwrap().iter().find(|l| l["name"] == "HIGH").unwrap().clone();
    assert_eq!(high["delivered_defects_display"], 160);
}

#[test]
fn whatif_selection_delta() {
    let out = run(
        &["whatif", "--config", "-", "--set", "selected_level=D", "--name", "more testing", "--format", "json"],
        &defaults(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["name"], "more testing");
    assert_eq!(v["selection"]["delta_display"], -200);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["matrix"],
        vec!["matrix", "--config", "-", "--format", "xml"],
        vec!["estimate", "--bogus"],
    ] {
        let out = run(&args, "");
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    let out = run(&["whatif", "--config", "-", "--set", "levels.HIGH.colour=1"], &defaults());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["matrix", "--config", "/nonexistent/plan.json"], "");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2() {
    let out = run(&["matrix", "--config", "-"], "{ not json");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn invariant_errors_exit_1() {
    let doc = defaults().replacen("\"dre\": 0.95", "\"dre\": 1.0", 1);
    let out = run(&["matrix", "--config", "-"], &doc);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levels[4].dre"));
}

#[test]
fn ordering_warning_is_not_an_error_without_strict() {
    let doc = defaults().replacen("\"dre\": 0.6", "\"dre\": 0.2", 1);
    let out = run(&["matrix", "--config", "-"], &doc);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levels.MEDIUM.dre"));
    let out = run(&["matrix", "--config", "-", "--strict"], &doc);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stdout.is_empty(), "the matrix is still printed");
}

#[test]
fn scope_add_activity() {
    let out = run(
        &["scope", "--config", "-", "--add-activity", "Security=No,No,Minimal,Good,Complete", "--format", "csv"],
        &defaults(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("Security,No,No,Minimal,Good,Complete\n"));
    let out = run(&["scope", "--config", "-", "--add-activity", "Security=Good,No,No,No,No"], &defaults());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn calibrate_round() {
    let history = plan_file("release,phase,order,defects\nr1,unit,1,60\nr1,system,2,30\nr1,field,3,10\n");
    let sizes = plan_file("release,loc,loc_per_fp\nr1,12500,125\n");
    let (h, s) = (history.path().to_str().unwrap(), sizes.path().to_str().unwrap());
    let out = run(&["calibrate", "dre", "--history", h, "--phase", "system", "--format", "csv"], "");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "release,phase,found,later,DRE,caution\nr1,system,30,10,75%,\n");
    let out = run(&["calibrate", "density", "--history", h, "--sizes", s, "--json"], "");
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!((v["defects_per_kloc"].as_f64(), v["defects_per_fp"].as_f64()), (Some(8.0), Some(1.0)));
    let out = run(&["calibrate", "dre", "--history", h, "--phase", "nope"], "");
    assert_eq!(out.status.code(), Some(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A strict plan with any DRE ordering violation always exits 1.
    #[test]
    fn strict_violations_exit_1(at in 1usize..5, fraction in 0.0..0.95f64) {
        let mut doc: Value = serde_json::from_str(&defaults()).unwrap();
        doc["options"]["strict_validation"] = Value::Bool(true);
        let levels = doc["levels"].as_array_mut().unwrap();
        let below = levels[at - 1]["dre"].as_f64().unwrap() * fraction;
        levels[at]["dre"] = serde_json::json!(below);
        let out = run(&["matrix", "--config", "-"], &doc.to_string());
        prop_assert_eq!(out.status.code(), Some(1));
    }
}
