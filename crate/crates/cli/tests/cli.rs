//! End-to-end tests driving the binary.

use serde_json::Value;
use std::process::{Command, Output};

fn wellfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wellfactor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn special_eval_omega() {
    let out = wellfactor(&["special", "eval", "--fn", "omega", "--at", "2.5"]);
    let v = stdout_json(&out);
    let expect = (1.0 + 1.5f64.ln()) / 2.5;
    assert!((v["value"].as_f64().unwrap() - expect).abs() < 1e-12);
}

#[test]
fn special_eval_big_and_small_f() {
    let out = wellfactor(&["special", "eval", "--fn", "F", "--at", "2"]);
    let v = stdout_json(&out);
    let eg = (0.5772156649015329f64).exp();
    assert!((v["value"].as_f64().unwrap() - eg).abs() < 1e-12);
    let out = wellfactor(&["special", "eval", "--fn", "f", "--at", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn special_eval_rejects_bad_domain() {
    let out = wellfactor(&["special", "eval", "--fn", "omega", "--at", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exponent_level_single() {
    let out = wellfactor(&[
        "exponent", "level", "--theta", "7/32", "--alpha", "0", "--t", "0.163",
    ]);
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.5815).abs() < 1e-12);
    assert_eq!(v["active_branch"], "rising");
}

#[test]
fn exponent_level_triple() {
    let out = wellfactor(&[
        "exponent", "level", "--theta", "7/32", "--alpha", "0", "--t1", "0.20", "--t2", "0.15",
        "--t3", "0.10",
    ]);
    let v = stdout_json(&out);
    assert!(v["value"].as_f64().unwrap() >= 0.6);
    assert!(v["active_branch"].is_string());
}

#[test]
fn factorize_greedy_example() {
    let out = wellfactor(&[
        "factorize",
        "--level",
        "0.61",
        "--cut",
        "0.30",
        "--theta",
        "7/32",
        "--alpha",
        "0",
        "--primes",
        "0.19,0.18,0.02,0.02",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["case"], "greedy");
    let rows = v["constraints"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let lhs = row[0].as_f64().unwrap();
        let rhs = row[1].as_f64().unwrap();
        assert!(lhs <= rhs + 1e-12);
    }
    let total = v["a"].as_f64().unwrap() + v["b"].as_f64().unwrap() + v["c"].as_f64().unwrap();
    assert!((total - 0.41).abs() < 1e-12);
}

#[test]
fn factorize_failure_is_reported_not_fatal() {
    // level beyond the guaranteed threshold with a large leading prime
    let out = wellfactor(&[
        "factorize",
        "--level",
        "0.62",
        "--cut",
        "0.30",
        "--primes",
        "0.245",
    ]);
    let v = stdout_json(&out);
    assert!(v["case"].is_null());
    assert!(v["failure"].is_string());
}

#[test]
fn factorize_rejects_unsorted_primes() {
    let out = wellfactor(&[
        "factorize",
        "--level",
        "0.6",
        "--cut",
        "0.3",
        "--primes",
        "0.1,0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integrals_single_item_matches_table() {
    let out = wellfactor(&["integrals", "--set", "twin", "--which", "I9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().nth(1).unwrap();
    let value: f64 = line.strip_prefix("I9,").unwrap().parse().unwrap();
    assert!((value - 0.0330294).abs() < 1e-4);
}

#[test]
fn integrals_output_is_deterministic() {
    let args = ["integrals", "--set", "goldbach", "--which", "I16,I20", "--coarse"];
    let a = wellfactor(&args);
    let b = wellfactor(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn integrals_rejects_bad_params_file() {
    let dir = std::env::temp_dir().join("wf-bad-params");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"rho": "0.1"}"#).unwrap();
    let out = wellfactor(&[
        "integrals",
        "--params",
        path.to_str().unwrap(),
        "--which",
        "I9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn params_file_roundtrip() {
    let dir = std::env::temp_dir().join("wf-params");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("twin.json");
    std::fs::write(
        &path,
        r#"{"rho": "0.275", "rho_prime": "0.12313", "tau1": "0.163",
           "tau2": "0.211", "tau3": "0.24589", "mu": "0.210", "eps": "0.002"}"#,
    )
    .unwrap();
    let from_file = wellfactor(&[
        "integrals",
        "--params",
        path.to_str().unwrap(),
        "--which",
        "I12",
        "--coarse",
    ]);
    let builtin = wellfactor(&["integrals", "--set", "twin", "--which", "I12", "--coarse"]);
    assert_eq!(from_file.stdout, builtin.stdout);
}

#[test]
fn model_converge_small_grid() {
    let dir = std::env::temp_dir().join("wf-model");
    std::fs::create_dir_all(&dir).unwrap();
    let dump = dir.join("grid.csv");
    let out = wellfactor(&[
        "model",
        "converge",
        "--theta",
        "7/32",
        "--variant",
        "plain",
        "--step",
        "0.05",
        "--out",
        dump.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    let diff = v["max_abs_diff"].as_f64().unwrap();
    assert!(diff <= 0.15, "diff {diff}");
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("q,y,E,M,diff\n"));
    // 61 x 121 grid rows plus header
    assert_eq!(text.lines().count(), 61 * 121 + 1);
}

#[test]
fn reproduce_exponents_writes_exact_constants() {
    let dir = std::env::temp_dir().join("wf-repro-exp");
    let _ = std::fs::remove_dir_all(&dir);
    let out = wellfactor(&[
        "reproduce-paper",
        "exponents",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("exponent_constants.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["triple_well_factorable_level"], "66/107");
    assert_eq!(v["uniform_level"], "153/256");
    assert_eq!(v["balance_point_alpha0"], "25/107");
    assert_eq!(v["balance_point_alpha1"], "25/128");
    assert_eq!(v["triple_level_at_selberg"], "5/8");
}

#[test]
fn bound_coarse_twin() {
    let out = wellfactor(&["bound", "twin", "--coarse"]);
    let v = stdout_json(&out);
    let ratio = v["ratio"].as_f64().unwrap();
    assert!((ratio - 3.22899).abs() < 0.02, "ratio {ratio}");
    assert_eq!(v["g_values"].as_array().unwrap().len(), 8);
    assert_eq!(v["i_values"].as_array().unwrap().len(), 13);
}
