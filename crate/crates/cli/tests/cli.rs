use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn mto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mto"))
        .args(args)
        .env_remove("MTO_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = mto(args);
    assert!(
        out.status.success(),
        "mto {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn bits(v: &Value) -> f64 {
    v["bits"].as_f64().expect("bits field")
}

#[test]
fn regime_siso_098_is_noisy() {
    let r = json(&["regime", "--channel", &fixture("siso_098.json"), "--require-noisy"]);
    assert_eq!(r["verdict"], true);
    assert_eq!(r["report"]["method"], "eq1_siso");
    assert!((r["report"]["margin"].as_f64().unwrap() - 0.02).abs() < 1e-9);
    assert_eq!(r["general"]["verdict"], true);
}

#[test]
fn regime_collision_lp_verdict() {
    let r = json(&["regime", "--channel", &fixture("collision.json")]);
    assert_eq!(r["verdict"], true);
    assert_eq!(r["report"]["method"], "degraded_lp");
}

#[test]
fn regime_violated_with_witness() {
    let path = fixture("siso_violated.json");
    let r = json(&["regime", "--channel", &path, "--witness"]);
    assert_eq!(r["verdict"], false);
    assert_eq!(r["witness"]["kind"], "conditional_mi");
    assert!(r["witness"]["bits"].as_f64().unwrap() > 1e-6);

    let strict = mto(&["regime", "--channel", &path, "--require-noisy"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn regime_other_families() {
    let simo = json(&["regime", "--channel", &fixture("simo.json")]);
    assert_eq!(simo["report"]["method"], "simo");
    assert!((simo["report"]["margin"].as_f64().unwrap() - 0.75).abs() < 1e-12);

    let fading = json(&["regime", "--channel", &fixture("fading.json")]);
    assert_eq!(fading["report"]["method"], "fading");
    assert!((fading["report"]["margin"].as_f64().unwrap() - 0.2).abs() < 1e-12);

    let parallel = json(&["regime", "--channel", &fixture("parallel_xor.json")]);
    assert_eq!(parallel["carriers"].as_array().unwrap().len(), 2);
    assert_eq!(parallel["verdict"], true);
}

#[test]
fn regime_tolerance_rejudges_margin() {
    let r = json(&["regime", "--channel", &fixture("siso_098.json"), "--tol", "0.05"]);
    assert_eq!(r["report"]["boundary"], true);
    assert_eq!(r["report"]["verdict"], true);
}

#[test]
fn capacity_xor() {
    let r = json(&["capacity", "--channel", &fixture("xor.json")]);
    assert!((bits(&r) - 3.0).abs() < 1e-6);
    let d = json(&["capacity", "--channel", &fixture("xor.json"), "--deterministic"]);
    assert!((bits(&d) - 3.0).abs() < 1e-9);
}

#[test]
fn capacity_gaussian_k3() {
    let r = json(&["capacity", "--channel", &fixture("gaussian_k3.json")]);
    assert!((bits(&r) - 2.590).abs() < 1e-3, "{}", bits(&r));
}

#[test]
fn capacity_parallel_xor() {
    let r = json(&["capacity", "--channel", &fixture("parallel_xor.json")]);
    assert!((bits(&r) - 6.0).abs() < 1e-6);
}

#[test]
fn capacity_needs_lower_bound_outside_regime() {
    let path = fixture("siso_violated.json");
    assert_eq!(mto(&["capacity", "--channel", &path]).status.code(), Some(1));
    let r = json(&["capacity", "--channel", &path, "--lower-bound"]);
    assert_eq!(r["lower_bound"], true);
    assert!(bits(&r) > 0.0);
}

#[test]
fn capacity_rejects_fading() {
    assert_eq!(mto(&["capacity", "--channel", &fixture("fading.json")]).status.code(), Some(2));
}

#[test]
fn capacity_is_seed_deterministic() {
    let args = ["capacity", "--channel", &fixture("bpsk.json"), "--seed", "4"];
    assert_eq!(mto(&args).stdout, mto(&args).stdout);
}

#[test]
fn region_xor_lists_and_delta() {
    let r = json(&["region", "--channel", &fixture("xor.json"), "--delta", "2,3"]);
    assert_eq!(r["alignment_gain"]["bits"].as_f64().unwrap(), 1.0);
    assert!((r["outer_sum_rate"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((r["inner_sum_rate"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r["parametric_matches_inner"], true);

    let text = mto(&["region", "--channel", &fixture("xor.json"), "--format", "text"]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("R_1 + R_2 + R_3 <= 3    # S={2,3}"));
    assert!(text.contains("R_1 + R_2 + R_3 <= 2    # S={2,3}"));
}

#[test]
fn region_resolvable_channel() {
    let r = json(&["region", "--channel", &fixture("concat3.json"), "--resolvable", "5"]);
    assert_eq!(r["resolvable"]["inner_equals_outer"], true);
    assert_eq!(r["resolvable"]["grid_points"], 125);
    let xor = mto(&["region", "--channel", &fixture("xor.json"), "--resolvable", "3"]);
    assert_eq!(xor.status.code(), Some(1));
}

#[test]
fn region_writes_vertex_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("xor");
    json(&["region", "--channel", &fixture("xor.json"), "--vertices", stem.to_str().unwrap()]);
    let outer = std::fs::read_to_string(dir.path().join("xor_outer.csv")).unwrap();
    let inner = std::fs::read_to_string(dir.path().join("xor_inner.csv")).unwrap();
    assert_eq!(outer.lines().next(), Some("R_1,R_2,R_3"));
    assert_eq!(outer.lines().count(), 9);
    assert_eq!(inner.lines().count(), 8);
    assert!(!inner.contains("1,1,1"));
}

#[test]
fn region_rejects_bad_delta() {
    assert_eq!(mto(&["region", "--channel", &fixture("xor.json"), "--delta", "1"]).status.code(), Some(2));
}

#[test]
fn verify_default_suite_passes() {
    let r = json(&["verify", "--lemma1", "100"]);
    assert_eq!(r["passed"], true);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks[0]["detail"].as_str().unwrap().split(',').next(), Some("100/100 hold"));
}

#[test]
fn verify_rejects_corrupted_channel() {
    let out = mto(&["verify", "--channel", &fixture("corrupted.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sums to"));
}

#[test]
fn simulate_csv_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let args = [
        "simulate",
        "--channel",
        &fixture("xor.json"),
        "--rates",
        "0.5,0.5,0.5",
        "--trials",
        "100",
        "--blocklengths",
        "6,10",
        "--csv",
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(mto(&args).status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "T,R_1,R_2,R_3,trials,errors,p_hat,ci_lo,ci_hi");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("6,0.5,0.5,0.5,100,"));
}

#[test]
fn simulate_is_seed_deterministic_across_thread_counts() {
    let path = fixture("xor.json");
    let args = ["simulate", "--channel", &path, "--rates", "0.5,0.5,0.5", "--trials", "100", "--blocklengths", "8", "--seed", "7"];
    let single = Command::new(env!("CARGO_BIN_EXE_mto")).args(args).env("MTO_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_mto")).args(args).env("MTO_THREADS", "4").output().unwrap();
    assert!(single.status.success());
    assert_eq!(single.stdout, many.stdout);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(mto(&["capacity", "--channel", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(mto(&["simulate", "--channel", &fixture("xor.json"), "--rates", "0.5"]).status.code(), Some(2));
    assert_eq!(mto(&["regime", "--channel", &fixture("xor.json"), "--bogus"]).status.code(), Some(2));
    assert_eq!(mto(&["capacity"]).status.code(), Some(2));
}
