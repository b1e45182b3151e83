use std::process::{Command, Output};

use serde_json::Value;

fn bmop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmop")).args(args).env_remove("BMOP_PRECISION").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<f64>> {
    stdout(o).lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn eval_q1_matches_bessel_combination() {
    let o = bmop(&["eval", "--kind", "Q", "--mu", "0", "--nu", "1", "--a", "1", "--b", "2", "--n", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    // -2 I_0(2) + 3 I_1(2), from an independent arbitrary-precision evaluation
    assert!(rel(r[0][1], 0.212739959239853) < 1e-13, "{}", r[0][1]);
}

#[test]
fn eval_q0_is_the_weight() {
    let o = bmop(&["eval", "--kind", "Q", "--preset", "S0", "--n", "0", "--x", "1"]);
    // omega_{1/2,1}(1) = I_{1/2}(2) = sinh(2) / sqrt(pi)
    let want = 2f64.sinh() / std::f64::consts::PI.sqrt();
    assert!(rel(rows(&o)[0][1], want) < 1e-14);
}

#[test]
fn csv_has_header_and_seventeen_digits() {
    let o = bmop(&["eval", "--kind", "P", "--preset", "S1", "--n", "2", "--x-min", "0.5", "--x-max", "4", "--points", "8"]);
    let text = stdout(&o);
    assert!(text.starts_with('#'));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 8);
    for field in data[0].split(',') {
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn polynomial_kinds_reconstruct_q() {
    let get = |kind: &str| rows(&bmop(&["eval", "--kind", kind, "--preset", "S0", "--n", "3", "--x", "1.5"]))[0][1];
    let (a1, a2, q) = (get("A1"), get("A2"), get("Q"));
    // omega_{1/2,1}(x) and omega_{3/2,1}(x) in closed form at x = 1.5
    let z = 2.0 * 1.5f64.sqrt();
    let c = (2.0 / (std::f64::consts::PI * z)).sqrt();
    let w0 = 1.5f64.powf(0.25) * c * z.sinh();
    let w1 = 1.5f64.powf(0.75) * c * (z.cosh() - z.sinh() / z);
    assert!(rel(a1 * w0 + a2 * w1, q) < 1e-10);
}

#[test]
fn parameter_violation_exits_2() {
    let o = bmop(&["eval", "--kind", "Q", "--mu", "0", "--nu", "1", "--a", "2", "--b", "1", "--n", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b > a > 0"));
    assert_eq!(bmop(&["eval", "--kind", "Q", "--n", "1", "--x", "1"]).status.code(), Some(2));
    assert_eq!(bmop(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bmop(&["sample", "--n", "2", "--m", "2", "--tau", "0.5"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    // Q_3 near x = 1e6 is about e^2000
    let o = bmop(&["eval", "--kind", "Q", "--preset", "S0", "--n", "3", "--x", "1e6"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn precision_from_environment() {
    let base = rows(&bmop(&["eval", "--kind", "Q", "--preset", "S0", "--n", "6", "--x", "2"]))[0][1];
    let o = Command::new(env!("CARGO_BIN_EXE_bmop"))
        .args(["eval", "--kind", "Q", "--preset", "S0", "--n", "6", "--x", "2"])
        .env("BMOP_PRECISION", "extended:192")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("# precision extended:192"));
    assert!(rel(rows(&o)[0][1], base) < 1e-12);
    let bad = Command::new(env!("CARGO_BIN_EXE_bmop")).args(["eval", "--kind", "Q", "--preset", "S0", "--n", "1", "--x", "2"]).env("BMOP_PRECISION", "quad").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_biorth_small() {
    let o = bmop(&["verify", "--suite", "biorth", "--N", "6", "--preset", "S0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "bmop/1");
    assert_eq!(v["suite"], "biorth");
    assert_eq!(v["pass"], true);
    let first = &v["checks"][0];
    assert!(first["max_error"].as_f64().unwrap() < 1e-8);
    for key in ["name", "max_error", "tolerance", "pass"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn verify_recurrence() {
    let o = bmop(&["verify", "--suite", "recurrence", "--n-max", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let residuals: Vec<f64> = v["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().contains("residual")).map(|c| c["max_error"].as_f64().unwrap()).collect();
    assert_eq!(residuals.len(), 4);
    assert!(residuals.iter().all(|r| *r < 1e-9));
}

#[test]
fn kernel_single_term_is_q0_p0() {
    let k = rows(&bmop(&["kernel", "--n", "1", "--kappa", "1", "--nu-total", "2.5", "--alpha", "0.7", "--beta", "1.3", "--x", "0.5,2"]));
    for r in k {
        let x = format!("{}", r[0]);
        let q = rows(&bmop(&["eval", "--kind", "Q", "--mu", "1", "--nu", "1.5", "--a", "0.7", "--b", "1.3", "--n", "0", "--x", &x]))[0][1];
        let p = rows(&bmop(&["eval", "--kind", "P", "--mu", "1", "--nu", "1.5", "--a", "0.7", "--b", "1.3", "--n", "0", "--x", &x]))[0][1];
        assert!(rel(r[1], q * p) < 1e-13);
    }
}

#[test]
fn kernel_column_sum_and_tail() {
    let k = rows(&bmop(&["kernel", "--n", "2", "--m", "4", "--tau", "0.5", "--x-min", "0.005", "--x-max", "199.995", "--points", "20000"]));
    let h = k[1][0] - k[0][0];
    let sum: f64 = k.iter().map(|r| r[1] * h).sum();
    assert!((sum - 2.0).abs() < 0.02, "{sum}");
    let far = rows(&bmop(&["kernel", "--n", "2", "--m", "4", "--tau", "0.5", "--x", "1e4"]));
    assert!(far[0][1].abs() < 1e-12);
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let prefix = dir.path().join(tag);
        let o = bmop(&["sample", "--n", "2", "--m", "4", "--tau", "0.5", "--seed", "11", "--samples", "3000", "--out", prefix.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let csv = std::fs::read(prefix.with_extension("csv")).unwrap();
        let bin = std::fs::read(prefix.with_extension("bin")).unwrap();
        let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
        (csv, bin, summary)
    };
    let (c1, b1, s1) = run("a");
    let (c2, b2, s2) = run("b");
    assert_eq!(c1, c2);
    assert_eq!(b1, b2);
    assert_eq!(s1["mean"], s2["mean"]);
    let data = String::from_utf8(c1).unwrap();
    assert_eq!(data.lines().filter(|l| !l.starts_with('#')).count(), 3000);
    assert_eq!(&b1[..8], b"BMOPSMP1");
    assert_eq!(s1["schema"], "bmop/1");
    assert_eq!(s1["seed"], 11);
    let z = s1["z_score"].as_f64().unwrap();
    assert!(z.abs() < 3.0, "{z}");
}

#[test]
fn json_table_output() {
    let o = bmop(&["eval", "--kind", "Q", "--preset", "S1", "--n", "2", "--x", "1,2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "bmop/1");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][1]["x"], 2.0);
}

#[test]
fn coeffs_rebuild_q_and_list_recurrence() {
    let c = rows(&bmop(&["coeffs", "--kind", "Q", "--preset", "S0", "--n", "1"]));
    assert_eq!(c.len(), 2);
    let z = 2.0 * 1.5f64.sqrt();
    let k = (2.0 / (std::f64::consts::PI * z)).sqrt();
    let w0 = 1.5f64.powf(0.25) * k * z.sinh();
    let w1 = 1.5f64.powf(0.75) * k * (z.cosh() - z.sinh() / z);
    let q = rows(&bmop(&["eval", "--kind", "Q", "--preset", "S0", "--n", "1", "--x", "1.5"]))[0][1];
    assert!(rel(c[0][1] * w0 + c[1][1] * w1, q) < 1e-12);
    let r = rows(&bmop(&["coeffs", "--kind", "rec-P", "--preset", "S1", "--n", "4"]));
    assert_eq!(r.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    assert_eq!(bmop(&["coeffs", "--kind", "Q", "--n", "1"]).status.code(), Some(2));
}
