use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plap_core::{pi_p, solve_k, Coefficient, Exponent, Problem};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/configs")
        .join(name)
}

fn plap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(name: &str) -> Output {
    let path = config(name);
    plap(&["--config", path.to_str().unwrap()])
}

/// Runs twice, checks byte-identical output, returns stdout and exit code.
fn deterministic(name: &str) -> (String, i32) {
    let a = run_config(name);
    let b = run_config(name);
    assert_eq!(a.stdout, b.stdout, "{name}: output differs between runs");
    assert_eq!(a.status.code(), b.status.code());
    (
        String::from_utf8(a.stdout).unwrap(),
        a.status.code().unwrap(),
    )
}

fn csv(body: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = body.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn two_phase(p: f64) -> Problem {
    Problem::new(
        1.0,
        Exponent::new(p).unwrap(),
        Coefficient::piecewise_constant(vec![0.0, 0.5, 1.0], vec![1.0, 4.0]).unwrap(),
        Coefficient::constant(1.0, 1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn pfunc_golden() {
    let (body, code) = deterministic("pfunc.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    assert_eq!(h, ["x", "sin_p", "dsin_p", "first_integral"]);
    assert_eq!(rows.len(), 9);
    let pi3 = pi_p(Exponent::new(3.0).unwrap());
    assert!((num(&rows[2][0]) - pi3 / 2.0).abs() < 1e-13);
    assert!((num(&rows[2][1]) - 1.0).abs() < 1e-13);
    assert!(
        (num(&rows[8][0])
            - 2.0 * 2.0 * std::f64::consts::PI * 2f64.powf(1.0 / 3.0)
                / (3.0 * (std::f64::consts::PI / 3.0).sin()))
        .abs()
            < 1e-12
    );
    for r in &rows {
        assert!((num(&r[3]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn solve_golden() {
    let (body, code) = deterministic("solve.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    assert_eq!(
        h,
        ["k", "lambda", "interior_zeros", "weyl_lower", "weyl_upper"]
    );
    for (i, r) in rows.iter().enumerate() {
        let k = (i + 1) as f64;
        let exact = (std::f64::consts::PI * k).powi(2);
        assert!((num(&r[1]) / exact - 1.0).abs() < 1e-8, "{r:?}");
        assert_eq!(r[2], i.to_string());
    }
}

#[test]
fn lambda1_fem_golden() {
    let (body, code) = deterministic("lambda1_fem.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    let oracle = solve_k(&two_phase(2.0), 1, 1e-12).unwrap().lambda;
    let l = num(&rows[0][col(&h, "lambda1")]);
    assert!((l / oracle - 1.0).abs() < 0.01 && l >= oracle);
}

#[test]
fn lambda2_eq_golden() {
    let (body, code) = deterministic("lambda2_eq.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    let oracle = solve_k(&two_phase(3.0), 2, 1e-12).unwrap();
    assert!((num(&rows[0][col(&h, "lambda2")]) / oracle.lambda - 1.0).abs() < 1e-6);
    assert!((num(&rows[0][col(&h, "c_star")]) - oracle.zeros[0]).abs() < 1e-6);
}

#[test]
fn check_bounds_golden() {
    let (body, code) = deterministic("check_bounds.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    assert_eq!(rows.len(), 4);
    let ok = col(&h, "ok");
    for r in &rows {
        assert_eq!(r[ok], "true");
        assert!(num(&r[col(&h, "margin_lower")]) >= 0.0);
        assert!(num(&r[col(&h, "margin_upper")]) >= 0.0);
        assert!(num(&r[col(&h, "min_nodal_length")]) >= num(&r[col(&h, "nodal_bound")]));
    }
    assert_eq!(rows[1][col(&h, "nodal_bound")], "0.25");
}

#[test]
fn check_bounds_flags_violation() {
    let (body, code) = deterministic("check_bounds_violation.toml");
    assert_eq!(code, 4);
    let (h, rows) = csv(&body);
    let ok = col(&h, "ok");
    assert_eq!(rows[0][ok], "true");
    assert_eq!(rows[1][ok], "false");
    assert!(num(&rows[1][col(&h, "margin_upper")]) < 0.0);
}

#[test]
fn picone_golden() {
    let (body, code) = deterministic("picone.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    assert_eq!(rows[0][col(&h, "tuples")], "10000");
    assert_eq!(rows[0][col(&h, "ok")], "true");
    assert!(num(&rows[0][col(&h, "min_l")]) >= -1e-12);
}

#[test]
fn homogenize_golden() {
    let (body, code) = deterministic("homogenize.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    let a_star = num(&rows[0][col(&h, "a_star")]);
    assert!((a_star - 16.0 / 9.0).abs() < 1e-13);
    let pi3 = pi_p(Exponent::new(3.0).unwrap());
    for (i, r) in rows.iter().enumerate() {
        let expected = 16.0 / 9.0 * (pi3 * (i + 1) as f64).powi(3);
        assert!((num(&r[col(&h, "lambda_star")]) / expected - 1.0).abs() < 1e-13);
    }
}

#[test]
fn sweep_golden() {
    let (body, code) = deterministic("sweep.toml");
    assert_eq!(code, 0);
    let (h, rows) = csv(&body);
    assert_eq!(h, ["n", "epsilon", "lambda", "rel_error"]);
    let errs: Vec<f64> = rows.iter().map(|r| num(&r[3])).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(*errs.last().unwrap() < 0.05);
    let ns: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ns, ["2", "4", "8", "16", "32", "64"]);
}

#[test]
fn sweep_json_summary() {
    let (body, code) = deterministic("sweep_json.toml");
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["subcommand"], "sweep");
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["summary"]["weyl_ok"], true);
    let pi3 = pi_p(Exponent::new(3.0).unwrap());
    let star = v["summary"]["lambda_star"].as_f64().unwrap();
    assert!((star / (16.0 / 9.0 * (2.0 * pi3).powi(3)) - 1.0).abs() < 1e-13);
}

#[test]
fn config_error_exit_code() {
    let out = run_config("bad_value.toml");
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.a.values[1]"));

    let out = plap(&["--config", "/nonexistent/plap.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plap(&["sweep", "--config", config("solve.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonconvergence_exit_code() {
    let out = run_config("nonconvergence.toml");
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn out_and_format_flags() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("solve.json");
    let out = plap(&[
        "solve",
        "--config",
        config("solve.toml").to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
        "--format",
        "json",
        "--verbose",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["k"], 1);
}
