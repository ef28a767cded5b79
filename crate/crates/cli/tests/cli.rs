use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cyclic-dde"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const SCALAR: &str = r#"{"type":"unidirectional","tau":1,"mu":[1],"g":[{"kind":"linear_gain","gain":-1}]}"#;

fn tanh_pair(dir: &Path) -> PathBuf {
    let ku = cyclic_dde::spectral::k_u(&[1.0, 1.0], 1.0).unwrap();
    let gamma = (1.5 * ku).sqrt();
    let text = format!(
        r#"{{"type":"unidirectional","tau":1,"mu":[1,1],"g":[{{"kind":"tanh_sigmoid","gain":{gamma}}},{{"kind":"tanh_sigmoid","gain":{}}}]}}"#,
        -gamma
    );
    write(dir, "tanh.json", &text)
}

#[test]
fn analyze_reports_borders() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", SCALAR);
    let v = json(&run(&["analyze", spec.to_str().unwrap()]));
    let s = &v["spectrum"];
    assert!((s["K_u"].as_f64().unwrap() - 2.2618263341146).abs() < 1e-9);
    assert!((s["K_c"].as_f64().unwrap() - (-2f64).exp()).abs() < 1e-9);
    assert_eq!(s["a1_holds"], Value::Bool(false));
    assert_eq!(v["validation"]["pass"], Value::Bool(true));
}

#[test]
fn analyze_echoes_window() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", SCALAR);
    let v = json(&run(&["analyze", spec.to_str().unwrap(), "--window", "-10,2,0,50"]));
    let w = &v["spectrum"]["window"];
    assert_eq!(w["re_min"].as_f64(), Some(-10.0));
    assert_eq!(w["re_max"].as_f64(), Some(2.0));
    assert_eq!(w["im_min"].as_f64(), Some(0.0));
    assert_eq!(w["im_max"].as_f64(), Some(50.0));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{not json");
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let missing = run(&["box", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    // stable scalar loop: no root near the axis to seed from
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", SCALAR);
    let out = run(&["simulate", spec.to_str().unwrap(), "--seed-eps", "0.01"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zero_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", SCALAR);
    let out = run(&["simulate", spec.to_str().unwrap(), "--seed-eps", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_preset_reproduces_cosine() {
    let out = run(&["simulate", "--model", "2,3", "--t-end", "3", "--m", "256"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x0,x1,x2"));
    let omega = std::f64::consts::PI * 2.5;
    let phi = std::f64::consts::PI / 6.0;
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        for j in 0..3 {
            assert!((v[j + 1] - (omega * v[0] + j as f64 * phi).cos()).abs() < 1e-6, "{line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 3 * 256 + 1);
}

#[test]
fn random_run_has_nonincreasing_v_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tanh_pair(dir.path());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let v = dir.path().join(format!("v{k}.csv"));
        let out = run(&[
            "simulate",
            spec.to_str().unwrap(),
            "--random-amplitude",
            "0.7",
            "--rng-seed",
            "5",
            "--t-end",
            "30",
            "--v-series",
            v.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push((out.stdout, fs::read_to_string(&v).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let vs: Vec<u64> = outputs[0].1.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(vs.len() > 250);
    assert!(vs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn orbit_converges_and_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tanh_pair(dir.path());
    let samples = dir.path().join("orbit.csv");
    let v = json(&run(&["orbit", spec.to_str().unwrap(), "--samples", samples.to_str().unwrap()]));
    assert_eq!(v["converged"], Value::Bool(true));
    assert!(v["period"].as_f64().unwrap() > 0.0);
    assert!(v["crossings"].as_array().unwrap().len() >= 4);
    assert_eq!(v["verification"]["v_equals_one"], Value::Bool(true));
    assert_eq!(v["verification"]["in_box"], Value::Bool(true));
    let text = fs::read_to_string(samples).unwrap();
    assert_eq!(text.lines().next(), Some("phase,t,x0,x1"));
    assert_eq!(text.lines().count(), 513);
}

#[test]
fn box_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tanh_pair(dir.path());
    let v = json(&run(&["box", spec.to_str().unwrap()]));
    let sys = cyclic_dde::systems::SystemSpec::from_json(&fs::read_to_string(&spec).unwrap()).unwrap().unidirectional().unwrap();
    let expect = cyclic_dde::steady::attractor_box(&sys).unwrap();
    let got: Vec<[f64; 2]> = serde_json::from_value(v["intervals"].clone()).unwrap();
    // JSON text round trip can move the last bit
    for (g, e) in got.iter().zip(&expect.intervals) {
        assert!((g[0] - e[0]).abs() <= 1e-14 * e[0].abs() && (g[1] - e[1]).abs() <= 1e-14 * e[1].abs());
    }
    assert_eq!(got.len(), expect.intervals.len());
}

#[test]
fn sweep_over_gain_changes_sign_at_border() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", SCALAR);
    let out = run(&["sweep", spec.to_str().unwrap(), "--param", "K", "--grid", "2.0:2.5:6", "--no-orbit"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6);
    let values: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    let signs: Vec<bool> = rows.iter().map(|r| r[1].parse::<f64>().unwrap() > 0.0).collect();
    let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1);
    // the flip sits between the rows bracketing K_u
    let ku: f64 = rows[0][4].parse().unwrap();
    for (v, s) in values.iter().zip(&signs) {
        assert_eq!(*s, *v > ku);
    }
}

#[test]
fn repressilator_report() {
    let v = json(&run(&["repressilator", "--T", "8", "--beta", "3"]));
    assert_eq!(v["validation_pass"], Value::Bool(true));
    assert!(v["K"].as_f64().unwrap() > v["K_u"].as_f64().unwrap());
    assert_eq!(v["orbit"]["converged"], Value::Bool(true));
    assert_eq!(v["orbit_in_gene_box"], Value::Bool(true));
    let below = json(&run(&["repressilator", "--T", "1"]));
    assert_eq!(below["orbit"]["converged"], Value::Bool(false));
    let p: f64 = below["equilibrium"]["p"][0].as_f64().unwrap();
    assert!((p - 0.682327803828082).abs() < 1e-9);
}
