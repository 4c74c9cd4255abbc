use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn urt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urt"))
        .current_dir(dir)
        .env_remove("URT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(o: &Output, key: &str) -> String {
    let prefix = format!("{key}=");
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in output:\n{}", stdout(o)))
}

fn two_user_files() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.json"), r#"{"M": [[0.5, 0.2], [0.1, 0.4]], "u": [0.1, 0.1]}"#).unwrap();
    fs::write(dir.path().join("norm.json"), r#"{"generators": [[1, 0], [0, 1]]}"#).unwrap();
    dir
}

#[test]
fn conjecture_builtin_reports_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = urt(dir.path(), &["conjecture", "--builtin-paper", "--out", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&o, "quasiconvexity_violated"), "true");
    assert_eq!(value(&o, "sym_psd"), "true");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc["quasiconvexity_violated"], true);
}

#[test]
fn radius_of_two_user_example() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["radius", "--model", "model.json", "--norm", "norm.json", "--sinr", "1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rho: f64 = value(&o, "spectral_radius").parse().unwrap();
    assert!((rho - (5.0 + 5f64.sqrt()) / 10.0).abs() < 1e-9);
    let rates = urt(dir.path(), &["radius", "--model", "model.json", "--norm", "norm.json", "--rates", &format!("{0},{0}", 2f64.ln())]);
    assert_eq!(value(&rates, "spectral_radius"), value(&o, "spectral_radius"));
}

#[test]
fn radius_without_norm_uses_asymptotic_mapping() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["radius", "--model", "model.json", "--sinr", "1,1"]);
    assert_eq!(o.status.code(), Some(0));
    let rho: f64 = value(&o, "spectral_radius").parse().unwrap();
    // ρ([[0.5, 0.2], [0.1, 0.4]])
    let exact = (0.9 + (0.01f64 + 0.08).sqrt()) / 2.0;
    assert!((rho - exact).abs() < 1e-11);
}

#[test]
fn empty_cloud_is_header_only() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["pareto-sample", "--model", "model.json", "--norm", "norm.json", "--count", "0", "--out", "c.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("p1,p2,s1,s2,r1,r2,rho"));
    let o = urt(dir.path(), &["pareto-sample", "--model", "model.json", "--norm", "norm.json", "--count", "0"]);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn verdicts_are_not_errors() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["feasible", "--model", "model.json", "--norm", "norm.json", "--sinr", "2,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "status"), "infeasible");
    let o = urt(dir.path(), &["check-zcompat", "--builtin-paper", "scenario"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "overall"), "not_certified");
    assert_eq!(value(&o, "failing_pairs"), "(1,3)");
    let o = urt(dir.path(), &["rate-member", "--model", "model.json", "--rates", "5,5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "membership"), "exterior");
}

#[test]
fn feasible_reports_power() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["feasible", "--model", "model.json", "--norm", "norm.json", "--sinr", "1,1", "--out", "v.json"]);
    assert_eq!(value(&o, "status"), "feasible-interior");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    // (I − M)⁻¹u with M = [[0.5, 0.2], [0.1, 0.4]], u = 0.1·1.
    let p = doc["power"].as_array().unwrap();
    // (I − M)⁻¹ = [[0.6, 0.2], [0.1, 0.5]] / 0.28.
    let expect = [0.08 / 0.28, 0.06 / 0.28];
    for (a, b) in p.iter().zip(expect) {
        assert!((a.as_f64().unwrap() - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn malformed_json_names_the_field() {
    let dir = two_user_files();
    fs::write(dir.path().join("bad.json"), r#"{"M": [[0.5, 0.2], [0.1, 0.4]], "u": [0.1, "oops"]}"#).unwrap();
    let o = urt(dir.path(), &["radius", "--model", "bad.json", "--sinr", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("u[1]"), "{}", stderr(&o));
    fs::write(dir.path().join("bad_norm.json"), r#"{"generatorz": [[1, 0]]}"#).unwrap();
    let o = urt(dir.path(), &["radius", "--model", "model.json", "--norm", "bad_norm.json", "--sinr", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("generator"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let dir = two_user_files();
    let cases: &[&[&str]] = &[
        &["radius", "--model", "model.json", "--sinr", "1,1", "--bogus"],
        &["radius", "--model", "missing.json", "--sinr", "1,1"],
        &["radius", "--model", "model.json"],
        &["radius", "--model", "model.json", "--sinr", "1,1", "--rates", "1,1"],
        &["pareto-sample", "--model", "model.json", "--norm", "norm.json", "--out", "no/such/dir/c.csv"],
        &["sumrate", "--model", "model.json", "--norm", "norm.json", "--weights", "1,1", "--tol", "0"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = urt(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn path_errors_stop_before_work() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["sumrate", "--model", "model.json", "--norm", "norm.json", "--weights", "1,1", "--out", "nope/s.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
}

#[test]
fn domain_errors_exit_one() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["radius", "--model", "model.json", "--norm", "norm.json", "--sinr", "1,1,1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = urt(dir.path(), &["radius", "--model", "model.json", "--norm", "norm.json", "--sinr", "1,1", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("residual"), "{}", stderr(&o));
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let dir = two_user_files();
    let base = ["pareto-sample", "--model", "model.json", "--norm", "norm.json", "--count", "200", "--seed", "7"];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["--out", "a.csv", "--threads", "1"]);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["--out", "b.csv"]);
    assert_eq!(urt(dir.path(), &a).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_urt"))
        .current_dir(dir.path())
        .env("URT_THREADS", "3")
        .args(&b)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap().lines().count(), 201);
}

#[test]
fn scenario_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"seed": 29, "num_realizations": 50}"#).unwrap();
    let o = urt(dir.path(), &["scenario", "gen", "--config", "cfg.json", "--out", "s1.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    urt(dir.path(), &["scenario", "gen", "--config", "cfg.json", "--out", "s2.json"]);
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("s1.json"), read("s2.json"));
    let o = urt(dir.path(), &["scenario", "reduce", "--in", "s1.json", "--out", "m.json", "--norm-out", "n.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&o, "users"), "3");
    let o = urt(dir.path(), &["sumrate", "--model", "m.json", "--norm", "n.json", "--weights", "1,1,1", "--out", "sol.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sol.json")).unwrap()).unwrap();
    assert_eq!(sol["rates"].as_array().unwrap().len(), 3);

    fs::write(dir.path().join("bad_cfg.json"), r#"{"aps_per_user": 9}"#).unwrap();
    let o = urt(dir.path(), &["scenario", "gen", "--config", "bad_cfg.json"]);
    assert_eq!(o.status.code(), Some(1));
    let o = urt(dir.path(), &["scenario", "gen", "--store-channels", "--seed", "3", "--out", "raw.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("raw.json")).unwrap().contains("beamformers"));
}

#[test]
fn shift_min_and_custom_conjecture() {
    let dir = two_user_files();
    let o = urt(dir.path(), &["shift-min", "--builtin-paper", "--out", "s.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&o, "certified"), "true");
    let alpha: f64 = value(&o, "alpha").parse().unwrap();
    assert!(alpha > 0.0);
    fs::write(dir.path().join("mat.json"), "[[1, 0], [0, 1]]").unwrap();
    let o = urt(dir.path(), &["conjecture", "--matrix", "mat.json", "--x1", "1,2", "--x2", "2,1", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&o, "quasiconvexity_violated"), "false");
    let o = urt(dir.path(), &["conjecture", "--matrix", "mat.json"]);
    assert_eq!(o.status.code(), Some(2));
}
