use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divmoment"))
        .args(args)
        .env_remove("DIVMOMENT_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let out = run(&["sieve", "--limit", "10", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn validation_errors_exit_one() {
    let out = run(&["moment", "--family", "delta", "--p", "3", "--T", "1000", "--U", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["ezeta", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn resource_errors_exit_two() {
    let out = run(&["sieve", "--limit", "100000000000"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sieve_writes_cache_and_prints_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.cache");
    let v = json(&run(&["sieve", "--limit", "1000000", "--out", path.to_str().unwrap()]));
    assert_eq!(v["report"]["prefix"], 13_970_034);
    assert_eq!(v["manifest"]["command"], "sieve");
    assert_eq!(v["manifest"]["id"].as_str().unwrap().len(), 40);
    assert!(path.metadata().unwrap().len() > 4_000_000);
}

#[test]
fn moment_json_with_auto_shift() {
    let v = json(&run(&[
        "moment", "--family", "delta", "--p", "4", "--T", "1e5", "--H", "1e5", "--U", "auto45", "--main", "both",
        "--y-const", "5", "--format", "json",
    ]));
    let m = &v["report"]["moment"];
    assert_eq!(m["spec"]["U"], 177.0);
    assert!(m["direct_value"].as_f64().unwrap() > 0.0);
    assert!(m["main_diagonal"].as_f64().unwrap() > 0.0);
    assert!(m["main_quadruple"].as_f64().unwrap() > 0.0);
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_divmoment"))
        .args(["ezeta", "--t", "200", "--evaluator", "quadrature"])
        .env("DIVMOMENT_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    let v = json(&out);
    let caches = v["manifest"]["input_caches"].as_array().unwrap();
    assert_eq!(caches.len(), 1);
    assert!(caches[0].as_str().unwrap().starts_with("EINT"));
    let stored: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(stored.len(), 1);
}

#[test]
fn same_inputs_same_report_bytes() {
    let args = ["enumerate", "--y", "40", "--kind", "gap", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let ratios: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(10).unwrap().parse().unwrap())
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn family_csv_columns() {
    let out = run(&["enumerate", "--y", "9", "--kind", "off-diagonal", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "l,m1,m2,m3,m4,n1,n2,n3,n4,multiplicity,manifest_id");
    assert_eq!(lines.count(), 1);
}

#[test]
fn count_and_admissible_and_sums() {
    let v = json(&run(&["count", "--N", "2", "--delta", "0.01"]));
    // only the diagonal equalities in [1, 2]^4
    assert_eq!(v["report"]["records"][0]["count"], 6);
    let v = json(&run(&["admissible", "--family", "delta", "--T", "4e6", "--U", "auto45", "--case", "fourth_moment"]));
    assert_eq!(v["report"]["cases"][0]["passes"], true);
    let v = json(&run(&["sums", "--which", "c1", "--z", "10"]));
    assert!((v["report"]["value"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn trig_check_and_verify_pass() {
    let v = json(&run(&["trig-check", "--k-max", "6", "--samples", "200"]));
    assert!(v["report"]["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
    let out = run(&["verify", "--suite", "2,7"]);
    let v = json(&out);
    assert_eq!(v["report"]["failed"], 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS [ 2]"));
}

#[test]
fn delta_reports_both_forms() {
    let v = json(&run(&["delta", "--x", "1000.5", "--N", "1000"]));
    let r = &v["report"];
    assert!((r["exact"].as_f64().unwrap() - r["voronoi"].as_f64().unwrap()).abs() < 5.0);
}
